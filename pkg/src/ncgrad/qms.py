"""Lindblad generators and trace-symmetric Markov semigroups.

A generator is specified by a weighted family of self-adjoint jump
operators ``(c_j, v_j)``. The associated derivations are the scaled
commutators ``d_j x = sqrt(c_j) [v_j, x]`` and the generator is the
Dirichlet-form operator ``L = D^+ D`` (adjoint with respect to the
algebra's weighted GNS inner product on the domain side and the ambient
normalized trace on the module side).

On algebras whose trace extends the ambient normalized trace this is
exactly the familiar form

    L x = sum_j c_j (v_j^2 x + x v_j^2 - 2 v_j x v_j),

compressed to the algebra; the equality is asserted at construction
time. The semigroup P_t = exp(-t L) is computed by spectral calculus on
the GNS-Hermitian superoperator matrix, so eigendata is shared across
all t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .algebra import Subalgebra, TracialAlgebra, conditional_expectation

JUMP_HERM_TOL = 1e-12
KERNEL_EIG_TOL = 1e-9
CHOI_TOL = 1e-9


class QmsVerificationError(Exception):
    def __init__(self, report):
        self.report = report
        failed = [c["property"] for c in report.checks if not c["passed"]]
        super().__init__(f"semigroup verification failed: {failed}")


class LindbladGenerator:
    """Weighted self-adjoint jump family on a tracial algebra.

    Jump operators live in the ambient matrix space and need not belong
    to the algebra itself (group models use diagonal position operators
    on B(l^2(G)), the two-point model uses an off-diagonal swap).
    """

    def __init__(self, algebra: TracialAlgebra, jumps, label=None,
                 curvature_bound=None, bound_origin=None):
        self.algebra = algebra
        self.label = label or "generator"
        self.curvature_bound = curvature_bound
        self.bound_origin = bound_origin
        d = algebra.dim
        self.jumps = []
        for c, v in jumps:
            c = float(c)
            v = np.asarray(v, dtype=complex)
            if c <= 0:
                raise ValueError(f"jump weights must be positive, got {c}")
            if v.shape != (d, d):
                raise ValueError(f"jump operator shape {v.shape} != ({d},{d})")
            if not linalg.is_hermitian(v, JUMP_HERM_TOL):
                raise ValueError("jump operators must be self-adjoint")
            self.jumps.append((c, linalg.hermitize(v)))

        self._build_superops()
        self._eig = None
        self._fixed_point = None
        self._module = None

    def _build_superops(self):
        alg = self.algebra
        d = alg.dim
        inv_scale = 1.0 / alg.gns_scale
        amb_scale = 1.0 / np.sqrt(d)
        self.derivation_matrices = []
        for c, v in self.jumps:
            comm = np.sqrt(c) * (linalg.lmul_matrix(v) - linalg.rmul_matrix(v))
            dj = amb_scale * (comm @ alg.embedding) * inv_scale[None, :]
            self.derivation_matrices.append(dj)

        n = alg.gns_dim
        s = np.zeros((n, n), dtype=complex)
        for dj in self.derivation_matrices:
            s += dj.conj().T @ dj
        self.superop_gns = linalg.hermitize(s)
        self.superop = alg.from_gns(self.superop_gns)

        one = alg.gvec(alg.identity())
        if np.linalg.norm(self.superop_gns @ one) > 1e-10 * (
            1.0 + linalg.frobenius(self.superop_gns)
        ):
            raise ValueError("generator does not annihilate the identity")

        if alg.is_uniform and self.jumps:
            direct = self._formula_superop()
            if not linalg.rel_close(direct, self.superop, 1e-10):
                raise AssertionError(
                    "Dirichlet-form generator disagrees with the Lindblad formula"
                )

    def _formula_superop(self):
        """sum_j c_j (v^2 x + x v^2 - 2 v x v), compressed to the algebra."""
        alg = self.algebra
        cols = []
        for e in alg.basis_elements():
            acc = np.zeros_like(e)
            for c, v in self.jumps:
                acc += c * (v @ v @ e + e @ v @ v - 2.0 * v @ e @ v)
            cols.append(alg.vec(alg.project(acc)))
        return np.stack(cols, axis=1)

    # -- spectral data -------------------------------------------------------

    def eig(self):
        if self._eig is None:
            self._eig = linalg.eig_hermitian(self.superop_gns)
            if self._eig.eigenvalues[0] < -KERNEL_EIG_TOL:
                raise linalg.LinalgError(
                    f"generator has a negative eigenvalue "
                    f"{self._eig.eigenvalues[0]:.3e}"
                )
        return self._eig

    def semigroup(self) -> "Semigroup":
        return Semigroup(self)

    def apply(self, x) -> np.ndarray:
        alg = self.algebra
        if np.shape(x) != (alg.dim, alg.dim):
            raise ValueError("dimension mismatch in lindblad_apply")
        return alg.unvec(self.superop @ alg.vec(x))

    def tangent_module(self):
        if self._module is None:
            from .calculus import TangentModule
            self._module = TangentModule(self)
        return self._module

    def fixed_point_data(self) -> "FixedPointData":
        if self._fixed_point is None:
            self._fixed_point = fixed_point_algebra(self)
        return self._fixed_point

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "algebra": self.algebra.to_json(),
            "jumps": [
                {"weight": c, "v": linalg.matrix_to_json(v)} for c, v in self.jumps
            ],
            "curvature_bound": self.curvature_bound,
            "bound_origin": self.bound_origin,
        }

    @classmethod
    def from_json(cls, obj) -> "LindbladGenerator":
        return cls(
            TracialAlgebra.from_json(obj["algebra"]),
            [(j["weight"], linalg.matrix_from_json(j["v"])) for j in obj["jumps"]],
            label=obj.get("label"),
            curvature_bound=obj.get("curvature_bound"),
            bound_origin=obj.get("bound_origin"),
        )

    def __repr__(self):
        return (
            f"LindbladGenerator({self.label!r}, dim={self.algebra.dim}, "
            f"jumps={len(self.jumps)})"
        )


def lindblad_apply(gen: LindbladGenerator, x) -> np.ndarray:
    return gen.apply(x)


class Semigroup:
    """P_t = exp(-t L) via the spectral decomposition of the generator."""

    def __init__(self, gen: LindbladGenerator):
        self.generator = gen
        self._dec = gen.eig()

    def superop_gns(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError(f"semigroup time must be nonnegative, got {t}")
        lam = np.clip(self._dec.eigenvalues, 0.0, None)
        u = self._dec.eigenvectors
        return (u * np.exp(-t * lam)) @ u.conj().T

    def superop(self, t: float) -> np.ndarray:
        return self.generator.algebra.from_gns(self.superop_gns(t))

    def apply(self, t: float, x) -> np.ndarray:
        alg = self.generator.algebra
        if np.shape(x) != (alg.dim, alg.dim):
            raise ValueError("dimension mismatch in semigroup_apply")
        g = self.superop_gns(t) @ alg.gvec(x)
        return alg.gunvec(g)


def semigroup_apply(gen: LindbladGenerator, t: float, x) -> np.ndarray:
    return gen.semigroup().apply(t, x)


@dataclass
class QmsVerification:
    ok: bool
    checks: list = field(default_factory=list)

    def failed(self):
        return [c for c in self.checks if not c["passed"]]


def verify_qms(gen: LindbladGenerator, t_samples=(0.1, 0.5, 1.3),
               rng=None, raise_on_failure=True) -> QmsVerification:
    """Check unitality, trace symmetry, positivity of the spectrum,
    the semigroup law and complete positivity (Choi test) at sampled t.
    """
    rng = np.random.default_rng(7) if rng is None else rng
    alg = gen.algebra
    sg = gen.semigroup()
    checks = []

    def record(prop, passed, margin, witness=None):
        checks.append(
            {"property": prop, "passed": bool(passed), "margin": float(margin),
             "witness": witness}
        )

    sym = linalg.frobenius(gen.superop_gns - gen.superop_gns.conj().T)
    record("trace_symmetry", sym <= 1e-10 * (1 + linalg.frobenius(gen.superop_gns)),
           sym)

    min_eig = float(gen.eig().eigenvalues[0])
    record("spectrum_nonnegative", min_eig >= -KERNEL_EIG_TOL, min_eig)

    one = alg.identity()
    for t in t_samples:
        err = alg.gns_norm(sg.apply(t, one) - one)
        record("unitality", err <= 1e-9, err, witness={"t": t})

    x = alg.random_element(rng)
    for t in t_samples:
        err = abs(alg.trace(sg.apply(t, x)) - alg.trace(x))
        record("trace_preservation", err <= 1e-9 * (1 + abs(alg.trace(x))), err,
               witness={"t": t})

    s, t = 0.3, 0.9
    err = linalg.frobenius(
        sg.superop_gns(s) @ sg.superop_gns(t) - sg.superop_gns(s + t)
    )
    record("semigroup_law", err <= 1e-9 * (1 + alg.gns_dim), err,
           witness={"s": s, "t": t})

    emb = alg.embedding
    for t in t_samples:
        amb = emb @ sg.superop(t) @ emb.T
        choi = linalg.choi_matrix(amb, alg.dim)
        tr = np.trace(choi).real
        _, m = linalg.psd_check(choi / tr)
        record("complete_positivity", m >= -CHOI_TOL, m, witness={"t": t})

    report = QmsVerification(ok=all(c["passed"] for c in checks), checks=checks)
    if raise_on_failure and not report.ok:
        raise QmsVerificationError(report)
    return report


@dataclass
class FixedPointData:
    subalgebra: Subalgebra
    spectral_gap: float
    expectation: np.ndarray  # plain-coordinates superoperator

    def expect(self, x):
        alg = self.subalgebra.algebra
        return alg.unvec(self.expectation @ alg.vec(x))


def fixed_point_algebra(gen: LindbladGenerator, kernel_tol=KERNEL_EIG_TOL
                        ) -> FixedPointData:
    """Kernel of the generator as a subalgebra, with the spectral gap.

    The 0-eigenspace of L is extracted from the GNS-Hermitian
    superoperator; its *-closedness is verified (failure signals a
    numerically broken generator). The gap is the smallest eigenvalue
    above the kernel threshold (infinite for the zero generator).
    """
    dec = gen.eig()
    alg = gen.algebra
    lam = dec.eigenvalues
    in_kernel = np.abs(lam) < kernel_tol
    positive = lam[~in_kernel]
    gap = float(positive.min()) if positive.size else float("inf")
    basis = [alg.gunvec(dec.eigenvectors[:, k]) for k in np.nonzero(in_kernel)[0]]
    try:
        sub = Subalgebra(alg, basis)
    except ValueError as exc:
        raise ValueError(
            f"fixed-point eigenspace of {gen.label!r} is not *-closed: {exc}"
        ) from exc
    return FixedPointData(sub, gap, conditional_expectation(sub))
