"""Operator means as spectral multipliers, and the density-weighted metric.

An operator mean is described by its scalar kernel m(s, t) on
(0, inf)^2 together with boundary values on the axes. Applied to a
density rho it acts on tangent-module components as the double operator
integral: in the eigenbasis of rho the component transforms entrywise,

    (rho_hat xi)~_kl = m(lam_k, lam_l) xi~_kl,

which realizes m(L(rho), R(rho)) because left and right multiplication
by rho commute. The quadratic form <xi, rho_hat xi>_H is the metric
||xi||_rho^2.

For pairs of positive matrices that do not commute (used only by the
axiom audit) the mean is evaluated through its representing function
f(x) = m(1, x) as A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg

EIG_NEG_TOL = 1e-10


class MeanDomainError(ValueError):
    """Density with an eigenvalue below the negativity tolerance."""


@dataclass(frozen=True)
class OperatorMean:
    name: str
    kernel: callable          # vectorized m(s, t) incl. boundary values
    symmetric: bool
    description: str = ""

    def kernel_matrix(self, eigenvalues) -> np.ndarray:
        lam = np.asarray(eigenvalues, dtype=float)
        return np.asarray(self.kernel(lam[:, None], lam[None, :]), dtype=float)

    def scalar(self, s, t) -> float:
        return float(self.kernel(np.asarray(s, float), np.asarray(t, float)))


def _log_kernel(s, t):
    s = np.asarray(s, float)
    t = np.asarray(t, float)
    pos = (s > 0) & (t > 0)
    ss = np.where(pos, s, 1.0)
    tt = np.where(pos, t, 1.0)
    u = np.log(tt) - np.log(ss)
    small = np.abs(u) < 1e-6
    u_safe = np.where(small, 1.0, u)
    # m = s * expm1(u)/u, series for |u| < 1e-6 to control cancellation
    series = ss * (1.0 + u / 2.0 + u * u / 6.0)
    exact = ss * np.expm1(u_safe) / u_safe
    return np.where(pos, np.where(small, series, exact), 0.0)


def _geometric_kernel(s, t):
    s = np.asarray(s, float)
    t = np.asarray(t, float)
    return np.sqrt(np.clip(s, 0.0, None) * np.clip(t, 0.0, None))


def _harmonic_kernel(s, t):
    s = np.asarray(s, float)
    t = np.asarray(t, float)
    pos = (s > 0) & (t > 0)
    denom = np.where(pos, s + t, 1.0)
    return np.where(pos, 2.0 * s * t / denom, 0.0)


BUILTIN_MEANS = {
    "arithmetic": OperatorMean(
        "arithmetic", lambda s, t: (np.asarray(s, float) + np.asarray(t, float)) / 2.0,
        True, "largest symmetric mean"),
    "logarithmic": OperatorMean(
        "logarithmic", _log_kernel, True,
        "(s - t)/(log s - log t), the entropic transport weight"),
    "geometric": OperatorMean("geometric", _geometric_kernel, True, "sqrt(s t)"),
    "harmonic": OperatorMean("harmonic", _harmonic_kernel, True, "2st/(s + t)"),
    "left": OperatorMean("left", lambda s, t: np.asarray(s, float) + 0.0 * t,
                         False, "left-trivial mean"),
    "right": OperatorMean("right", lambda s, t: np.asarray(t, float) + 0.0 * s,
                          False, "right-trivial mean, Bakry-Emery weight"),
}


def by_name(name) -> OperatorMean:
    if isinstance(name, OperatorMean):
        return name
    try:
        return BUILTIN_MEANS[name]
    except KeyError:
        raise ValueError(
            f"unknown mean {name!r}; choose from {sorted(BUILTIN_MEANS)}"
        ) from None


def density_eig(rho):
    """Eigendecomposition of a density, eigenvalues clipped at zero."""
    dec = linalg.eig_hermitian(rho)
    lam = dec.eigenvalues
    scale = float(np.abs(lam).max(initial=0.0))
    if lam[0] < -EIG_NEG_TOL * (1.0 + scale):
        raise MeanDomainError(f"density has negative eigenvalue {lam[0]:.3e}")
    return np.clip(lam, 0.0, None), dec.eigenvectors


def multiplier_matrix(mean, rho) -> np.ndarray:
    """Superoperator of m(L(rho), R(rho)) on one module component."""
    mean = by_name(mean)
    lam, u = density_eig(rho)
    k = mean.kernel_matrix(lam)
    w = np.kron(u.conj(), u)
    return (w * linalg.vec(k)[None, :]) @ w.conj().T


def rho_hat_apply(mean, rho, xi) -> np.ndarray:
    """Apply rho_hat componentwise to a tangent vector (n, D, D)."""
    mean = by_name(mean)
    lam, u = density_eig(rho)
    k = mean.kernel_matrix(lam)
    out = np.empty_like(np.asarray(xi, dtype=complex))
    for j, comp in enumerate(xi):
        tilde = u.conj().T @ comp @ u
        out[j] = u @ (k * tilde) @ u.conj().T
    return out


def rho_hat_matrix(mean, module, rho) -> np.ndarray:
    """Block-diagonal multiplier on the full stacked module."""
    block = multiplier_matrix(mean, rho)
    return np.kron(np.eye(module.n_components), block)


def metric_norm_sq(mean, module, rho, xi) -> float:
    """||xi||_rho^2 = <xi, rho_hat xi>_H, clamped at zero.

    For singular rho the kernel boundary values apply, so directions in
    the kernel of rho_hat simply carry weight zero.
    """
    weighted = rho_hat_apply(mean, rho, xi)
    val = module.component_inner(xi, weighted)
    scale = max(module.component_inner(xi, xi).real, 1.0)
    if val.real < -EIG_NEG_TOL * scale:
        raise linalg.LinalgError(f"metric form returned {val.real:.3e} < 0")
    return max(val.real, 0.0)


def metric_form(mean, module, rho) -> np.ndarray:
    """The Hermitian form D^+ rho_hat D on the algebra, GNS coordinates.

    Its quadratic form at a is ||da||_rho^2; it is the building block of
    both the gradient-estimate form and the transport metric.
    """
    block = multiplier_matrix(mean, rho)
    n = module.algebra.gns_dim
    acc = np.zeros((n, n), dtype=complex)
    for dj in module.d_matrices:
        acc += dj.conj().T @ block @ dj
    return linalg.hermitize(acc)


def _joint_eigh(a, b, tol=1e-10):
    """Simultaneous eigenbasis of a commuting Hermitian pair.

    Diagonalizes a, then diagonalizes the compression of b to each
    (near-degenerate) eigenspace of a, so shared degeneracies cannot mix
    eigenspaces of a.
    """
    lam, u = np.linalg.eigh(linalg.hermitize(a))
    bt = linalg.hermitize(u.conj().T @ b @ u)
    scale = float(np.abs(lam).max(initial=1.0))
    mu = np.zeros_like(lam)
    w = np.zeros_like(bt)
    start = 0
    for stop in range(1, len(lam) + 1):
        if stop == len(lam) or lam[stop] - lam[start] > tol * (1.0 + scale):
            g = slice(start, stop)
            mu[g], w[g, g] = np.linalg.eigh(bt[g, g])
            start = stop
    return lam, mu, u @ w


def mean_matrix(mean, a, b, reg=1e-12) -> np.ndarray:
    """Kubo-Ando mean of two positive matrices.

    Commuting pairs are evaluated by the joint spectral multiplier;
    otherwise the representing function f(x) = m(1, x) is used on the
    regularized first argument.
    """
    mean = by_name(mean)
    a = linalg.hermitize(a)
    b = linalg.hermitize(b)
    if linalg.frobenius(a @ b - b @ a) <= 1e-12 * (
        1.0 + linalg.frobenius(a) * linalg.frobenius(b)
    ):
        lam, mu, v = _joint_eigh(a, b)
        vals = mean.kernel(np.clip(lam, 0, None), np.clip(mu, 0, None))
        return (v * vals) @ v.conj().T
    scale = float(np.abs(np.linalg.eigvalsh(a)).max(initial=1.0))
    a_reg = a + reg * scale * np.eye(a.shape[0])
    rt = linalg.matrix_function(a_reg, np.sqrt)
    rti = np.linalg.inv(rt)
    inner = linalg.hermitize(rti @ b @ rti)
    lam, u = np.linalg.eigh(inner)
    f_vals = mean.kernel(np.ones_like(lam), np.clip(lam, 0.0, None))
    return linalg.hermitize(rt @ ((u * f_vals) @ u.conj().T) @ rt)


@dataclass
class MeanAuditReport:
    mean: str
    normalization_margin: float
    symmetric_claimed: bool
    symmetric_observed: bool
    scalar_monotonicity_margin: float
    matrix_monotonicity_margin: float
    transformer_margin: float
    witnesses: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (
            self.symmetric_claimed == self.symmetric_observed
            and self.normalization_margin <= 1e-12
            and self.scalar_monotonicity_margin >= -1e-9
            and self.matrix_monotonicity_margin >= -1e-9
            and self.transformer_margin >= -1e-9
        )


def mean_axiom_audit(mean, samples=20, dim=3, seed=11) -> MeanAuditReport:
    """Sampled matrix-level checks of the mean axioms.

    Monotonicity uses random ordered pairs A <= C, B <= D; the
    transformer inequality uses random full-rank C. Margins are minimum
    eigenvalues of the inequality slack.
    """
    mean = by_name(mean)
    rng = np.random.default_rng(seed)

    norm_margin = abs(mean.scalar(1.0, 1.0) - 1.0)

    grid = np.geomspace(0.05, 20.0, 12)
    sym = True
    scal = np.inf
    for s in grid:
        for t in grid:
            if abs(mean.scalar(s, t) - mean.scalar(t, s)) > 1e-12 * (1 + s + t):
                sym = False
            # monotonicity in each argument on the scalar grid
            scal = min(scal, mean.scalar(s * 1.01, t) - mean.scalar(s, t))
            scal = min(scal, mean.scalar(s, t * 1.01) - mean.scalar(s, t))

    def wishart(full_rank=True):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        w = g @ g.conj().T
        return w + (0.05 * np.eye(dim) if full_rank else 0.0)

    mono = np.inf
    trans = np.inf
    witnesses = {}
    for _ in range(samples):
        a, b = wishart(), wishart()
        c = a + wishart()
        d = b + wishart()
        _, m1 = linalg.psd_check(mean_matrix(mean, c, d) - mean_matrix(mean, a, b))
        if m1 < mono:
            mono, witnesses["monotonicity"] = m1, {"min_eig": m1}

        cc = wishart()
        lhs = cc @ mean_matrix(mean, a, b) @ cc
        rhs = mean_matrix(mean, cc @ a @ cc, cc @ b @ cc)
        scale = 1.0 + linalg.frobenius(rhs)
        _, m2 = linalg.psd_check(rhs - lhs)
        m2 /= scale
        if m2 < trans:
            trans, witnesses["transformer"] = m2, {"min_eig": m2}

    return MeanAuditReport(
        mean=mean.name,
        normalization_margin=norm_margin,
        symmetric_claimed=mean.symmetric,
        symmetric_observed=sym,
        scalar_monotonicity_margin=float(scal),
        matrix_monotonicity_margin=float(mono),
        transformer_margin=float(trans),
        witnesses=witnesses,
    )
