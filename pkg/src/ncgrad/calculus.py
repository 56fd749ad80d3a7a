"""First-order differential calculus of a jump generator.

The tangent module is the explicit direct sum H = (+)_j L^2(M_amb) with
one component per jump, carrying

* the derivation  d_j x = sqrt(c_j) (v_j x - x v_j),
* componentwise left/right multiplication actions,
* the involution J(xi) = (xi_j^*)_j,
* the carre du champ Gamma(x, y) = sum_j (d_j x)^* (d_j y).

Components live in the ambient matrix space with its normalized trace;
tangent vectors are stored as arrays of shape (n, D, D).
"""

from __future__ import annotations

import numpy as np

from . import linalg


class TangentModule:
    def __init__(self, gen):
        self.generator = gen
        self.algebra = gen.algebra
        self.n_components = len(gen.jumps)
        self.component_dim = gen.algebra.dim
        # GNS-coordinate derivation matrices (amb^2 x N), one per jump
        self.d_matrices = list(gen.derivation_matrices)
        self.stacked = (
            np.vstack(self.d_matrices)
            if self.d_matrices
            else np.zeros((0, gen.algebra.gns_dim), dtype=complex)
        )

    # -- derivations ---------------------------------------------------------

    def partial_apply(self, j: int, x) -> np.ndarray:
        if not 0 <= j < self.n_components:
            raise IndexError(f"component index {j} out of range")
        c, v = self.generator.jumps[j]
        return np.sqrt(c) * (v @ x - x @ v)

    def derivative(self, x) -> np.ndarray:
        """Stack all components d_j x into a tangent vector."""
        out = np.zeros(
            (self.n_components, self.component_dim, self.component_dim),
            dtype=complex,
        )
        for j in range(self.n_components):
            out[j] = self.partial_apply(j, x)
        return out

    def zero_vector(self) -> np.ndarray:
        return np.zeros(
            (self.n_components, self.component_dim, self.component_dim),
            dtype=complex,
        )

    # -- module inner product --------------------------------------------------

    def component_inner(self, xi, eta) -> complex:
        """<xi, eta>_H with the ambient normalized trace per component."""
        d = self.component_dim
        return complex(np.vdot(xi, eta) / d)

    def norm(self, xi) -> float:
        return float(np.sqrt(max(self.component_inner(xi, xi).real, 0.0)))

    # -- carre du champ ---------------------------------------------------------

    def gamma(self, x, y=None) -> np.ndarray:
        """Gamma(x, y) = sum_j (d_j x)^* (d_j y), an ambient matrix."""
        y = x if y is None else y
        acc = np.zeros((self.component_dim, self.component_dim), dtype=complex)
        for j in range(self.n_components):
            acc += self.partial_apply(j, x).conj().T @ self.partial_apply(j, y)
        return acc

    def gamma_vec(self, xi) -> np.ndarray:
        """Quadratic field of a tangent vector: sum_j xi_j^* xi_j."""
        acc = np.zeros((self.component_dim, self.component_dim), dtype=complex)
        for comp in xi:
            acc += comp.conj().T @ comp
        return acc

    # -- bimodule structure -------------------------------------------------------

    def left_action(self, a, xi) -> np.ndarray:
        return np.einsum("kl,jlm->jkm", np.asarray(a, dtype=complex), xi)

    def right_action(self, a, xi) -> np.ndarray:
        return np.einsum("jkl,lm->jkm", xi, np.asarray(a, dtype=complex))

    def involution(self, xi) -> np.ndarray:
        """J(xi) = (xi_j^*)_j, the antiunitary involution."""
        return np.conj(np.transpose(xi, (0, 2, 1)))

    def left_matrix(self, a) -> np.ndarray:
        """Superoperator of L(a) on the stacked module coordinates."""
        block = linalg.lmul_matrix(a)
        return np.kron(np.eye(self.n_components), block)

    def right_matrix(self, a) -> np.ndarray:
        block = linalg.rmul_matrix(a)
        return np.kron(np.eye(self.n_components), block)

    # -- coordinates --------------------------------------------------------------

    def stack(self, xi) -> np.ndarray:
        """Flatten a tangent vector to stacked plain coordinates."""
        return np.concatenate([linalg.vec(comp) for comp in xi])

    def unstack(self, v) -> np.ndarray:
        d = self.component_dim
        out = self.zero_vector()
        for j in range(self.n_components):
            out[j] = linalg.unvec(v[j * d * d : (j + 1) * d * d], d)
        return out
