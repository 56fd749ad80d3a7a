"""Tracial matrix algebras.

A :class:`TracialAlgebra` is a direct sum of full matrix blocks
``M_{d_1} + ... + M_{d_k}`` carried inside the ambient matrix space of
size ``D = sum d_b``, together with a faithful normalized trace

    tau(x) = sum_b w_b * tr(x_b) / d_b,       sum_b w_b = 1.

Elements are stored as plain D x D complex arrays supported on the
diagonal blocks. Two coordinate systems are used:

* plain coordinates: block entries column-stacked block by block (this
  is the serialized superoperator convention),
* GNS coordinates: plain coordinates rescaled entrywise by
  sqrt(w_b / d_b), in which the GNS inner product tau(x^* y) becomes the
  standard dot product and trace-symmetric superoperators become
  Hermitian matrices.

The ambient space M_D carries the normalized trace tr/D; tangent module
components live there (jump operators need not belong to the algebra).
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .linalg import vec as _avec

WEIGHT_TOL = 1e-12
DENSITY_TOL = 1e-12
STAR_CLOSED_TOL = 1e-10


class TracialAlgebra:
    """Block-diagonal matrix algebra with a weighted normalized trace."""

    def __init__(self, block_dims, block_weights=None):
        dims = [int(d) for d in block_dims]
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"block dims must be positive, got {block_dims}")
        if block_weights is None:
            total = sum(dims)
            weights = [d / total for d in dims]
        else:
            weights = [float(w) for w in block_weights]
        if len(weights) != len(dims) or any(w <= 0 for w in weights):
            raise ValueError("one positive weight per block is required")
        if abs(sum(weights) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"trace weights must sum to 1, got {sum(weights)}")
        self.block_dims = dims
        self.block_weights = weights
        self.dim = sum(dims)                      # ambient matrix size D
        self.gns_dim = sum(d * d for d in dims)   # N = sum d_b^2
        self._offsets = np.cumsum([0] + dims[:-1]).tolist()

        # entrywise GNS scale sqrt(w_b / d_b), in plain vec order
        scale = np.concatenate(
            [np.full(d * d, np.sqrt(w / d)) for d, w in zip(dims, weights)]
        )
        self.gns_scale = scale

        # 0/1 embedding of algebra coordinates into ambient vec coordinates
        emb = np.zeros((self.dim * self.dim, self.gns_dim))
        col = 0
        for off, d in zip(self._offsets, dims):
            for c in range(d):
                for r in range(d):
                    emb[(off + r) + (off + c) * self.dim, col] = 1.0
                    col += 1
        self.embedding = emb

    # -- basic structure ---------------------------------------------------

    @property
    def is_uniform(self) -> bool:
        """True iff tau extends to the normalized trace on the ambient M_D."""
        return all(
            abs(w - d / self.dim) <= WEIGHT_TOL
            for d, w in zip(self.block_dims, self.block_weights)
        )

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def blocks(self, x):
        x = np.asarray(x, dtype=complex)
        return [
            x[o : o + d, o : o + d] for o, d in zip(self._offsets, self.block_dims)
        ]

    def project(self, x) -> np.ndarray:
        """Compress an ambient matrix onto the block diagonal."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for o, d in zip(self._offsets, self.block_dims):
            out[o : o + d, o : o + d] = np.asarray(x)[o : o + d, o : o + d]
        return out

    def contains(self, x, tol=1e-10) -> bool:
        x = np.asarray(x, dtype=complex)
        return linalg.frobenius(x - self.project(x)) <= tol * (
            1.0 + linalg.frobenius(x)
        )

    # -- coordinates -------------------------------------------------------

    def vec(self, x) -> np.ndarray:
        """Plain coordinates: block entries column-stacked, blocks in order."""
        return np.concatenate([_avec(b) for b in self.blocks(x)])

    def unvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        pos = 0
        for o, d in zip(self._offsets, self.block_dims):
            out[o : o + d, o : o + d] = v[pos : pos + d * d].reshape(
                (d, d), order="F"
            )
            pos += d * d
        return out

    def gvec(self, x) -> np.ndarray:
        """GNS-orthonormal coordinates of an element."""
        return self.gns_scale * self.vec(x)

    def gunvec(self, g) -> np.ndarray:
        return self.unvec(np.asarray(g, dtype=complex) / self.gns_scale)

    def to_gns(self, superop) -> np.ndarray:
        """Conjugate a plain-coordinates superoperator into GNS coordinates."""
        s = self.gns_scale
        return (superop * (1.0 / s)[None, :]) * s[:, None]

    def from_gns(self, superop) -> np.ndarray:
        s = self.gns_scale
        return (superop * s[None, :]) * (1.0 / s)[:, None]

    # -- trace and inner product -------------------------------------------

    def trace(self, x) -> complex:
        """tau(x) = sum_b w_b tr(x_b)/d_b."""
        return complex(
            sum(
                w * np.trace(b) / d
                for b, d, w in zip(self.blocks(x), self.block_dims, self.block_weights)
            )
        )

    def gns_inner(self, x, y) -> complex:
        """<x, y> = tau(x^* y)."""
        if np.shape(x) != (self.dim, self.dim) or np.shape(y) != (self.dim, self.dim):
            raise ValueError("dimension mismatch in gns_inner")
        return complex(np.vdot(self.gvec(x), self.gvec(y)))

    def gns_norm(self, x) -> float:
        return float(np.linalg.norm(self.gvec(x)))

    # -- sampling ----------------------------------------------------------

    def random_element(self, rng) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for o, d in zip(self._offsets, self.block_dims):
            out[o : o + d, o : o + d] = rng.normal(size=(d, d)) + 1j * rng.normal(
                size=(d, d)
            )
        return out

    def random_hermitian(self, rng) -> np.ndarray:
        return linalg.hermitize(self.random_element(rng))

    def random_density(self, rng, rank=None, smoothing=0.0) -> np.ndarray:
        """Wishart-type density G G^H / tau(G G^H).

        ``rank`` truncates the Gaussian factor per block for
        near-degenerate stress samples; ``smoothing`` mixes in the
        identity density before renormalizing.
        """
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for o, d in zip(self._offsets, self.block_dims):
            r = d if rank is None else max(1, min(d, int(rank)))
            g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
            out[o : o + d, o : o + d] = g @ g.conj().T
        if smoothing > 0.0:
            out = (1.0 - smoothing) * out / abs(self.trace(out)) + smoothing * np.eye(
                self.dim
            )
        t = self.trace(out)
        return out / t.real

    def is_density(self, rho, tol=DENSITY_TOL):
        rho = np.asarray(rho, dtype=complex)
        if not linalg.is_hermitian(rho, 1e-10):
            return False
        if not self.contains(rho):
            return False
        min_eig = float(np.linalg.eigvalsh(linalg.hermitize(rho))[0])
        return min_eig >= -tol and abs(self.trace(rho) - 1.0) <= max(tol, 1e-10)

    # -- basis -------------------------------------------------------------

    def basis_elements(self):
        """Matrix-unit basis, plain coordinate order."""
        for k in range(self.gns_dim):
            v = np.zeros(self.gns_dim)
            v[k] = 1.0
            yield self.unvec(v)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {"blocks": self.block_dims, "weights": self.block_weights}

    @classmethod
    def from_json(cls, obj) -> "TracialAlgebra":
        return cls(obj["blocks"], obj.get("weights"))

    def __repr__(self):
        return f"TracialAlgebra(blocks={self.block_dims}, weights={self.block_weights})"


def full_matrix_algebra(d: int) -> TracialAlgebra:
    return TracialAlgebra([d])


def commutative_algebra(weights) -> TracialAlgebra:
    """Functions on a finite weighted point set, as 1x1 blocks."""
    return TracialAlgebra([1] * len(weights), list(weights))


def tensor(a1: TracialAlgebra, a2: TracialAlgebra):
    """Tensor product of two single-block algebras.

    Returns the product algebra M_{d1 d2} and the elementwise embedding
    ``(x, y) -> x (x) y``. Block-diagonal factors are not supported in
    this version.
    """
    if len(a1.block_dims) != 1 or len(a2.block_dims) != 1:
        raise ValueError("tensor products require single-block algebras")
    prod = full_matrix_algebra(a1.dim * a2.dim)

    def embed(x, y):
        return np.kron(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))

    return prod, embed


class Subalgebra:
    """A unital *-closed subspace given by a GNS-orthonormal basis."""

    def __init__(self, algebra: TracialAlgebra, basis, validate=True, rng=None):
        self.algebra = algebra
        self.basis = [np.asarray(b, dtype=complex) for b in basis]
        if validate:
            self._validate(rng or np.random.default_rng(0))

    def __len__(self):
        return len(self.basis)

    def _coords(self, x):
        return np.array([self.algebra.gns_inner(b, x) for b in self.basis])

    def project(self, x) -> np.ndarray:
        """GNS-orthogonal projection onto the subalgebra."""
        c = self._coords(x)
        out = np.zeros_like(self.basis[0])
        for ci, b in zip(c, self.basis):
            out += ci * b
        return out

    def distance(self, x) -> float:
        return self.algebra.gns_norm(x - self.project(x))

    def _validate(self, rng):
        alg = self.algebra
        gram = np.array(
            [[alg.gns_inner(a, b) for b in self.basis] for a in self.basis]
        )
        if linalg.frobenius(gram - np.eye(len(self.basis))) > 1e-8:
            raise ValueError("subalgebra basis is not GNS-orthonormal")
        if self.distance(alg.identity()) > STAR_CLOSED_TOL:
            raise ValueError("subalgebra does not contain the identity")
        # closure under adjoint and products, on the basis and sampled pairs
        for b in self.basis:
            if self.distance(b.conj().T) > STAR_CLOSED_TOL:
                raise ValueError("subalgebra basis is not closed under adjoints")
        idx = rng.integers(0, len(self.basis), size=(min(20, len(self.basis) ** 2), 2))
        for i, j in idx:
            prod = self.basis[i] @ self.basis[j]
            if self.distance(prod) > STAR_CLOSED_TOL * (1.0 + alg.gns_norm(prod)):
                raise ValueError("subalgebra basis is not closed under products")

    @classmethod
    def from_generators(cls, algebra: TracialAlgebra, generators, max_rounds=12):
        """Generate the unital *-algebra spanned by the given elements.

        Iterates products and adjoints, orthonormalizing until the
        dimension stabilizes.
        """
        elems = [algebra.identity()] + [
            np.asarray(g, dtype=complex) for g in generators
        ]
        elems += [g.conj().T for g in elems[1:]]
        basis = _orthonormalize(algebra, elems)
        for _ in range(max_rounds):
            products = [a @ b for a in basis for b in basis]
            new_basis = _orthonormalize(algebra, basis + products)
            if len(new_basis) == len(basis):
                return cls(algebra, new_basis)
            basis = new_basis
        raise ValueError("subalgebra generation did not stabilize")


def _orthonormalize(algebra, elements, tol=1e-9):
    """Gram-Schmidt in GNS coordinates, dropping near-dependent vectors."""
    rows = [algebra.gvec(e) for e in elements]
    basis = []
    for r in rows:
        for b in basis:
            r = r - np.vdot(b, r) * b
        n = np.linalg.norm(r)
        if n > tol:
            basis.append(r / n)
    return [algebra.gunvec(b) for b in basis]


def conditional_expectation(sub: Subalgebra) -> np.ndarray:
    """Trace-preserving conditional expectation onto a subalgebra.

    Returned as a plain-coordinates superoperator matrix. It is the
    GNS-orthogonal projection onto the subalgebra, hence idempotent,
    GNS-self-adjoint and trace preserving; positivity and the bimodule
    property are consequences of *-closedness and are exercised in the
    test suite.
    """
    alg = sub.algebra
    cols = np.stack([alg.gvec(b) for b in sub.basis], axis=1)
    proj_gns = cols @ cols.conj().T
    return alg.from_gns(proj_gns)


def diagonal_subalgebra(algebra: TracialAlgebra) -> Subalgebra:
    """The maximal abelian subalgebra of diagonal matrices."""
    basis = []
    for k in range(algebra.dim):
        e = np.zeros((algebra.dim, algebra.dim), dtype=complex)
        e[k, k] = 1.0
        basis.append(e / algebra.gns_norm(e))
    return Subalgebra(algebra, basis)


def scalar_subalgebra(algebra: TracialAlgebra) -> Subalgebra:
    """The trivial subalgebra C*1."""
    one = algebra.identity()
    return Subalgebra(algebra, [one / algebra.gns_norm(one)])
