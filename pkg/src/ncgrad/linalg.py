"""Dense complex Hermitian linear algebra kernel.

Everything downstream (superoperators, spectral calculus, positivity
checks) is built on the small set of primitives in this module:
eigendecompositions of Hermitian matrices, matrix functions, PSD tests
with explicit margins, column-stacking vectorization and superoperator
matrices.

Conventions, fixed because superoperator matrices are exchanged between
modules and serialized:

* vectorization is column-stacking (``order="F"``),
* "equals" means relative Frobenius distance below ``EQ_TOL`` unless a
  caller states otherwise,
* JSON encoding of a complex matrix is nested ``[re, im]`` pairs plus an
  explicit ``dims`` field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EQ_TOL = 1e-10
HERM_TOL = 1e-12


class LinalgError(Exception):
    """Numerical failure in a linear algebra kernel (residual attached)."""


class DomainError(ValueError):
    """A scalar function was evaluated outside its domain."""


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def rel_close(a, b, tol=EQ_TOL) -> bool:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return frobenius(a - b) <= tol * (1.0 + max(frobenius(a), frobenius(b)))


def is_hermitian(a, tol=HERM_TOL) -> bool:
    a = np.asarray(a, dtype=complex)
    scale = 1.0 + float(np.abs(a).max(initial=0.0))
    return frobenius(a - a.conj().T) <= tol * scale * a.shape[0]


def hermitize(a):
    """Symmetrize (A + A^H)/2; used before every eigendecomposition."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


@dataclass
class SpectralDecomposition:
    """Eigenvalues (ascending) and a unitary of column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T

    def apply_function(self, f) -> np.ndarray:
        vals = np.asarray(f(self.eigenvalues), dtype=complex)
        u = self.eigenvectors
        return (u * vals) @ u.conj().T


def eig_hermitian(a) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    The input is symmetrized first. The reconstruction
    ``U diag(lam) U^H`` must match the symmetrized input within
    ``1e-10 * (1 + ||A||_F)``, otherwise a :class:`LinalgError` carrying
    the residual is raised.
    """
    a = hermitize(a)
    lam, u = np.linalg.eigh(a)
    dec = SpectralDecomposition(lam, u)
    resid = frobenius(dec.reconstruct() - a)
    if resid > EQ_TOL * (1.0 + frobenius(a)):
        raise LinalgError(
            f"eigendecomposition residual {resid:.3e} exceeds tolerance "
            f"for a {a.shape[0]}x{a.shape[0]} matrix"
        )
    return dec


def matrix_function(a, f) -> np.ndarray:
    """Spectral calculus: U diag(f(lam)) U^H.

    The caller supplies boundary conventions inside ``f`` (for instance
    0*log(0) = 0). If ``f`` produces a non-finite value at some
    eigenvalue, a :class:`DomainError` names that eigenvalue.
    """
    dec = eig_hermitian(a)
    vals = np.asarray(f(dec.eigenvalues), dtype=complex)
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = int(np.argmax(bad))
        raise DomainError(
            f"matrix function undefined at eigenvalue {dec.eigenvalues[idx]!r}"
        )
    return (dec.eigenvectors * vals) @ dec.eigenvectors.conj().T


def psd_check(a, tol=0.0):
    """Check positive semidefiniteness up to a relative margin.

    Returns ``(flag, min_eigenvalue)`` where the flag is true iff
    ``min_eig >= -tol * (1 + ||A||)`` with the spectral norm of A.
    """
    lam = np.linalg.eigvalsh(hermitize(a))
    min_eig = float(lam[0]) if lam.size else 0.0
    norm = float(np.abs(lam).max(initial=0.0))
    return (min_eig >= -tol * (1.0 + norm), min_eig)


def vec(x) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(x, dtype=complex).reshape(-1, order="F")


def unvec(v, dim: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape((dim, dim), order="F")


def lmul_matrix(a) -> np.ndarray:
    """Superoperator of left multiplication: vec(a x) = (I (x) a) vec(x)."""
    a = np.asarray(a, dtype=complex)
    return np.kron(np.eye(a.shape[0]), a)


def rmul_matrix(a) -> np.ndarray:
    """Superoperator of right multiplication: vec(x a) = (a^T (x) I) vec(x)."""
    a = np.asarray(a, dtype=complex)
    return np.kron(a.T, np.eye(a.shape[0]))


def superop_matrix(action, dim: int, rng=None, check_linearity=True) -> np.ndarray:
    """Matrix of a linear map on dim x dim matrices.

    Column k is the vectorization of the action applied to the k-th
    matrix unit (column-stacking order). Linearity is spot-checked on
    sampled pairs within 1e-10 unless disabled.
    """
    mat = np.zeros((dim * dim, dim * dim), dtype=complex)
    for k in range(dim * dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[k % dim, k // dim] = 1.0
        mat[:, k] = vec(action(e))
    if check_linearity:
        rng = np.random.default_rng(0) if rng is None else rng
        for _ in range(3):
            x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            y = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            c = complex(rng.normal(), rng.normal())
            lhs = vec(action(x + c * y))
            rhs = mat @ (vec(x) + c * vec(y))
            if not rel_close(lhs, rhs, 1e-10):
                raise LinalgError("superop_matrix: action failed the linearity check")
    return mat


def choi_matrix(superop, dim: int) -> np.ndarray:
    """Choi matrix sum_ij e_ij (x) Phi(e_ij) of a superoperator matrix."""
    s4 = np.asarray(superop, dtype=complex).reshape(
        (dim, dim, dim, dim), order="F"
    )
    # s4[k, l, i, j] = <e_kl | Phi(e_ij)>; Choi[(i,k),(j,l)] = Phi(e_ij)[k,l]
    return s4.transpose(2, 0, 3, 1).reshape(dim * dim, dim * dim)


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {
        "dims": list(a.shape),
        "entries": [
            [[float(z.real), float(z.imag)] for z in row] for row in a
        ],
    }


def matrix_from_json(obj) -> np.ndarray:
    dims = obj["dims"]
    data = np.array(
        [[complex(p[0], p[1]) for p in row] for row in obj["entries"]],
        dtype=complex,
    )
    if list(data.shape) != list(dims):
        raise ValueError(f"matrix dims {dims} do not match entries {data.shape}")
    return data
