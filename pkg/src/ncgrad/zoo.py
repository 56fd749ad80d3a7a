"""Model catalog: generators with their best known estimate constants.

Constructors cover conditional-expectation semigroups (depolarizing and
friends), commuting-projection and commuting-swap families, and finite
group models driven by a cocycle: the length function psi(g) = |b(g)|^2
induces the semigroup P_t lambda_g = exp(-t psi(g)) lambda_g on the
group algebra, realized on B(l^2(G)) through the diagonal position
operators v_j delta_g = <b(g), e_j> delta_g.

Every constructor attaches the constant it is known to satisfy
(``curvature_bound``) and the construction that yields it
(``bound_origin``), so feasibility reports are self-describing.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .algebra import (
    Subalgebra,
    TracialAlgebra,
    commutative_algebra,
    conditional_expectation,
    full_matrix_algebra,
    scalar_subalgebra,
    diagonal_subalgebra,
)
from .qms import LindbladGenerator

PROJ_TOL = 1e-10
COMMUTE_TOL = 1e-10
EIGENRELATION_TOL = 1e-8


# ---------------------------------------------------------------------------
# conditional expectations
# ---------------------------------------------------------------------------

def conditional_expectation_model(sub: Subalgebra, label=None) -> LindbladGenerator:
    """Generator I - E for the expectation onto a subalgebra.

    A self-adjoint jump family is synthesized from a Kraus decomposition
    of E (Choi eigenvectors split into Hermitian and anti-Hermitian
    parts, each with half the Kraus weight); the result is verified to
    reproduce I - E exactly. Requires an algebra whose trace is the
    ambient normalized trace.
    """
    alg = sub.algebra
    if not alg.is_uniform:
        raise ValueError(
            "jump synthesis for I - E needs the ambient normalized trace"
        )
    e_mat = conditional_expectation(sub)
    d = alg.dim
    amb = alg.embedding @ e_mat @ alg.embedding.T
    choi = linalg.choi_matrix(amb, d)
    lam, vecs = np.linalg.eigh(linalg.hermitize(choi))
    jumps = []
    for weight, col in zip(lam, vecs.T):
        if weight < 1e-12:
            continue
        k = linalg.unvec(col, d)  # eigenvector entry (i*d + a) is K[a, i]
        h = 0.5 * (k + k.conj().T)
        a = (k - k.conj().T) / 2j
        for part in (h, a):
            if linalg.frobenius(part) > 1e-10:
                jumps.append((0.5 * float(weight), part))
    gen = LindbladGenerator(
        alg, jumps, label=label or f"cond-exp[{len(sub)}]",
        curvature_bound=0.5, bound_origin="conditional expectation",
    )
    target = np.eye(alg.gns_dim) - e_mat
    if not linalg.rel_close(gen.superop, target, 1e-10):
        raise linalg.LinalgError(
            "synthesized jumps do not reproduce I - E for this subalgebra"
        )
    return gen


def depolarizing_model(d: int) -> LindbladGenerator:
    """L = I - tau(.)1 on M_d."""
    alg = full_matrix_algebra(d)
    return conditional_expectation_model(
        scalar_subalgebra(alg), label=f"depolarizing{d}"
    )


def diagonal_expectation_model(d: int) -> LindbladGenerator:
    """L = I - E onto the diagonal masa of M_d (kills off-diagonals)."""
    alg = full_matrix_algebra(d)
    return conditional_expectation_model(
        diagonal_subalgebra(alg), label=f"diagonal{d}"
    )


# ---------------------------------------------------------------------------
# commuting projections and swaps
# ---------------------------------------------------------------------------

def commuting_projections_model(algebra: TracialAlgebra, projections,
                                label=None) -> LindbladGenerator:
    """Jumps (1, p_j) for commuting projections p_j.

    The commutation and idempotence hypotheses are load-bearing for the
    attached constant, so both are construction errors.
    """
    ps = [linalg.hermitize(p) for p in projections]
    for i, p in enumerate(ps):
        if not linalg.is_hermitian(np.asarray(projections[i]), 1e-10):
            raise ValueError(f"projection {i} is not self-adjoint")
        if linalg.frobenius(p @ p - p) > PROJ_TOL * (1.0 + linalg.frobenius(p)):
            raise ValueError(f"operator {i} is not idempotent")
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            comm = linalg.frobenius(ps[i] @ ps[j] - ps[j] @ ps[i])
            if comm > COMMUTE_TOL:
                raise ValueError(
                    f"projections {i} and {j} do not commute "
                    f"(commutator norm {comm:.3e})"
                )
    return LindbladGenerator(
        algebra, [(1.0, p) for p in ps],
        label=label or f"commproj{algebra.dim}",
        curvature_bound=1.0, bound_origin="commuting projections",
    )


def projection_model() -> LindbladGenerator:
    """Single projection diag(1, 0) in M_2."""
    p = np.diag([1.0, 0.0]).astype(complex)
    gen = commuting_projections_model(full_matrix_algebra(2), [p],
                                      label="projection2")
    return gen


def commproj4_model() -> LindbladGenerator:
    """Two diagonal bit-mask projections in M_4."""
    p1 = np.diag([1.0, 0.0, 1.0, 0.0]).astype(complex)
    p2 = np.diag([1.0, 1.0, 0.0, 0.0]).astype(complex)
    return commuting_projections_model(full_matrix_algebra(4), [p1, p2],
                                       label="commproj4")


def hypercube_model(d: int) -> LindbladGenerator:
    """Coordinate swaps on l^2({0,1}^d): L A = 1/2 sum_j (A - v_j A v_j).

    The v_j are commuting self-adjoint unitaries; since v_j^2 = 1 the
    generator equals the jump form with weights 1/4. Restricted to the
    diagonal subalgebra this is the simple-random-walk semigroup on the
    discrete hypercube.
    """
    if not 1 <= d <= 3:
        raise ValueError("hypercube dimension capped at 3")
    size = 2 ** d
    swaps = []
    for j in range(d):
        v = np.zeros((size, size), dtype=complex)
        for x in range(size):
            v[x ^ (1 << j), x] = 1.0
        swaps.append(v)
    for v in swaps:
        assert linalg.rel_close(v @ v, np.eye(size))
    return LindbladGenerator(
        full_matrix_algebra(size), [(0.25, v) for v in swaps],
        label=f"hypercube{d}",
        curvature_bound=1.0, bound_origin="commuting self-adjoint unitaries",
    )


def hypercube_walk_matrix(d: int) -> np.ndarray:
    """Generator of the simple random walk on {0,1}^d, (Qf)(x) =
    1/2 sum_j (f(x) - f(x ^ e_j)); reference for the restriction check."""
    size = 2 ** d
    q = np.zeros((size, size))
    for x in range(size):
        for j in range(d):
            q[x, x] += 0.5
            q[x, x ^ (1 << j)] -= 0.5
    return q


# ---------------------------------------------------------------------------
# two-point space
# ---------------------------------------------------------------------------

def two_point_model(p0: float = 1.0 / 3.0) -> LindbladGenerator:
    """Two-point space with stationary weights (p0, 1-p0), L = I - E.

    The algebra is commutative C^2; the first-order structure is the
    one-edge graph calculus, realized by a single ambient swap jump with
    weight p0 (1-p0), which reproduces the classical discrete transport
    metric with weight m(rho(0), rho(1)) on the edge. With uniform
    weights every mean yields the same optimal constant, so the
    reference model is genuinely non-uniform by default.
    """
    if not 0.0 < p0 < 1.0:
        raise ValueError("p0 must lie strictly between 0 and 1")
    alg = commutative_algebra([p0, 1.0 - p0])
    swap = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return LindbladGenerator(
        alg, [(p0 * (1.0 - p0), swap)], label="two_point",
        curvature_bound=None, bound_origin="two-point reference model",
    )


# ---------------------------------------------------------------------------
# finite group models
# ---------------------------------------------------------------------------

@dataclass
class FiniteGroupModel:
    """Cayley table, left-regular representation and cocycle data."""

    order: int
    table: np.ndarray                 # table[g, h] = g * h
    cocycle: np.ndarray               # (order, dim_cocycle), rows b(g)
    weights: np.ndarray               # one weight per cocycle coordinate
    names: list = None
    identity: int = 0
    psi: np.ndarray = None            # induced length, sum_j w_j <b, e_j>^2
    lambdas: list = field(default_factory=list)
    v_ops: list = field(default_factory=list)
    eigen_relation_residual: float = 0.0
    projection_flags: list = field(default_factory=list)
    cocycle_consistent: bool = True

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=int)
        g = self.order
        if self.table.shape != (g, g):
            raise ValueError("Cayley table shape mismatch")
        _check_group(self.table)
        self.identity = _identity_of(self.table)
        self.cocycle = np.asarray(self.cocycle, dtype=float)
        if self.weights is None:
            self.weights = np.ones(self.cocycle.shape[1])
        self.weights = np.asarray(self.weights, dtype=float)
        if linalg.frobenius(self.cocycle[self.identity]) > 1e-14:
            raise ValueError("cocycle must vanish at the identity")
        self.psi = (self.cocycle ** 2) @ self.weights
        self.lambdas = [self._lambda(g0) for g0 in range(g)]
        self.v_ops = [np.diag(self.cocycle[:, j].astype(complex))
                      for j in range(self.cocycle.shape[1])]
        self.projection_flags = [
            bool(linalg.rel_close(v @ v, v, 1e-12)) for v in self.v_ops
        ]

    def _lambda(self, g0: int) -> np.ndarray:
        """Left-regular permutation: lambda_g delta_h = delta_{g h}."""
        mat = np.zeros((self.order, self.order), dtype=complex)
        for h in range(self.order):
            mat[self.table[g0, h], h] = 1.0
        return mat


def _identity_of(table):
    n = table.shape[0]
    for e in range(n):
        if np.array_equal(table[e], np.arange(n)) and np.array_equal(
            table[:, e], np.arange(n)
        ):
            return e
    raise ValueError("Cayley table has no identity element")


def _check_group(table):
    n = table.shape[0]
    if table.min() < 0 or table.max() >= n:
        raise ValueError("Cayley table entries out of range")
    lhs = table[table]            # lhs[g,h,k] = (g h) k
    rhs = table[:, table]         # rhs[g,h,k] = g (h k)
    if not np.array_equal(lhs, rhs):
        raise ValueError("Cayley table is not associative")
    e = _identity_of(table)
    for g in range(n):
        if e not in table[g]:
            raise ValueError(f"element {g} has no inverse")


def group_lindblad_from_cocycle(table, cocycle, weights=None, names=None,
                                label=None):
    """Generator on B(l^2(G)) from diagonal cocycle operators.

    Builds v_j delta_g = <b(g), e_j> delta_g and the jump family
    (w_j, v_j). The defining eigen-relation L lambda_g = psi(g) lambda_g
    is checked; a residual above 1e-8 means the supplied b is not a true
    cocycle for the induced length and raises a warning (the relation,
    not cocycle-hood itself, is what is testable here).
    """
    table = np.asarray(table, dtype=int)
    model = FiniteGroupModel(
        order=table.shape[0], table=table, cocycle=cocycle,
        weights=weights, names=names,
    )
    alg = full_matrix_algebra(model.order)
    jumps = [
        (float(w), v) for w, v in zip(model.weights, model.v_ops)
        if linalg.frobenius(v) > 0 and w > 0
    ]
    gen = LindbladGenerator(
        alg, jumps, label=label or f"group{model.order}",
        curvature_bound=None, bound_origin="group cocycle",
    )
    resid = 0.0
    for g0 in range(model.order):
        lam = model.lambdas[g0]
        resid = max(
            resid, linalg.frobenius(gen.apply(lam) - model.psi[g0] * lam)
        )
    model.eigen_relation_residual = float(resid)
    if resid > EIGENRELATION_TOL:
        model.cocycle_consistent = False
        warnings.warn(
            f"eigen-relation residual {resid:.3e}: supplied b is not a "
            f"cocycle for the induced length", stacklevel=2
        )
    if all(model.projection_flags) and model.cocycle_consistent:
        # uniform-weight commuting projections carry the constant w * 1
        weights = set(np.round(model.weights, 14).tolist())
        if len(weights) == 1:
            gen.curvature_bound = float(model.weights[0])
            gen.bound_origin = "commuting projections (group cocycle)"
    return model, gen


def cyclic_group_model(n: int):
    """Word-length model on Z_n (n even, at most 8).

    The cocycle b(k) is the partial-sum embedding into R^{n/2}; the
    induced length is psi(k) = min(k, n - k) and all v_j are commuting
    diagonal projections, so the weight-1 jump family carries the
    commuting-projections constant 1. Odd n is rejected (embed Z_n into
    Z_{2n} instead).
    """
    if n % 2 != 0:
        raise ValueError("cyclic model needs even order; embed into Z_{2n}")
    if not 2 <= n <= 8:
        raise ValueError("cyclic order capped at 8")
    half = n // 2
    table = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    b = np.zeros((n, half))
    for k in range(1, n):
        if k <= half:
            b[k, :k] = 1.0
        else:
            b[k, k - half: half] = 1.0
    model, gen = group_lindblad_from_cocycle(
        table, b, weights=np.ones(half), label=f"cyclic{n}"
    )
    expected = np.minimum(np.arange(n), n - np.arange(n))
    assert np.array_equal(model.psi.astype(int), expected)
    gen.curvature_bound = 1.0
    gen.bound_origin = "commuting projections (group cocycle)"
    return model, gen


def symmetric_group_model(n: int):
    """Hamming-length model on S_n (n = 3 or 4).

    The cocycle b(sigma) = A_sigma - 1 lives in the matrix space with
    half-trace inner product; in its orthonormal basis the coordinates
    sqrt(2) <b(sigma), E_jk> are 0/1-valued, giving n^2 commuting
    diagonal projections v_jk and the jump family (1/2, v_jk). The
    induced length is the number of non-fixed points and the attached
    constant is 1/2.
    """
    if n not in (3, 4):
        raise ValueError("symmetric model supports n in {3, 4}")
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    order = len(perms)
    table = np.zeros((order, order), dtype=int)
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            comp = tuple(p[q[k]] for k in range(n))  # (p q)(k) = p(q(k))
            table[i, j] = index[comp]

    # v-values: sqrt(2) <b, E_jk>; equal to [sigma(k) = j] off the diagonal
    # and [sigma(j) != j] on it
    coords = np.zeros((order, n * n))
    for i, p in enumerate(perms):
        col = 0
        for j in range(n):
            for k in range(n):
                if j == k:
                    coords[i, col] = 0.0 if p[j] == j else 1.0
                else:
                    coords[i, col] = 1.0 if p[k] == j else 0.0
                col += 1
    model, gen = group_lindblad_from_cocycle(
        table, coords, weights=0.5 * np.ones(n * n),
        names=["".join(map(str, p)) for p in perms], label=f"symmetric{n}",
    )
    moved = np.array([sum(p[k] != k for k in range(n)) for p in perms])
    assert np.array_equal(model.psi.astype(int), moved)
    gen.curvature_bound = 0.5
    gen.bound_origin = "commuting projections (group cocycle, weight 1/2)"
    return model, gen


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

def _strip(fn):
    """Return only the generator from (model, generator) constructors."""
    def inner(**kw):
        out = fn(**kw)
        return out[1] if isinstance(out, tuple) else out
    return inner


CATALOG = {
    "depolarizing2": (lambda: depolarizing_model(2),
                      "I - tau(.)1 on M_2"),
    "depolarizing3": (lambda: depolarizing_model(3),
                      "I - tau(.)1 on M_3"),
    "diagonal2": (lambda: diagonal_expectation_model(2),
                  "I - E onto the diagonal of M_2"),
    "projection2": (projection_model,
                    "single projection diag(1,0) in M_2"),
    "commproj4": (commproj4_model,
                  "two diagonal bit-mask projections in M_4"),
    "hypercube1": (lambda: hypercube_model(1), "coordinate swaps, d = 1"),
    "hypercube2": (lambda: hypercube_model(2), "coordinate swaps, d = 2"),
    "hypercube3": (lambda: hypercube_model(3), "coordinate swaps, d = 3"),
    "cyclic4": (_strip(lambda: cyclic_group_model(4)),
                "word length on Z_4, on B(l^2)"),
    "cyclic6": (_strip(lambda: cyclic_group_model(6)),
                "word length on Z_6, on B(l^2)"),
    "cyclic8": (_strip(lambda: cyclic_group_model(8)),
                "word length on Z_8, on B(l^2)"),
    "symmetric3": (_strip(lambda: symmetric_group_model(3)),
                   "Hamming length on S_3, on B(l^2)"),
    "symmetric4": (_strip(lambda: symmetric_group_model(4)),
                   "Hamming length on S_4, on B(l^2)"),
    "two_point": (two_point_model,
                  "weighted two-point space, L = I - E"),
}


def build(name: str, **params) -> LindbladGenerator:
    if name not in CATALOG:
        raise ValueError(f"unknown model {name!r}; see `zoo list`")
    builder, _ = CATALOG[name]
    return builder(**params)


def catalog_rows():
    rows = []
    for name, (builder, desc) in CATALOG.items():
        gen = builder()
        rows.append(
            {
                "name": name,
                "gns_dim": gen.algebra.gns_dim,
                "jumps": len(gen.jumps),
                "curvature_bound": gen.curvature_bound,
                "bound_origin": gen.bound_origin,
                "description": desc,
            }
        )
    return rows
