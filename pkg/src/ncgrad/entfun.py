"""Entropy functionals and Fisher information.

All functionals are taken with respect to the algebra trace tau:

    Ent(rho)          = tau(rho log rho)              (0 log 0 = 0)
    Ent(rho || sigma) = tau(rho log rho) - tau(rho log sigma)
                        (infinite unless supp rho <= supp sigma)
    Ent_fix(rho)      = Ent(rho || E_fix(rho)),  E_fix onto ker L
    I(rho)            = tau((L rho) log rho)          (full support)

Along the semigroup, d/dt Ent(P_t rho) = -I(P_t rho), which makes I the
entropy production rate; the decay check and the modified log-Sobolev
estimator quantify the exponential versions of this statement.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .qms import LindbladGenerator

SUPPORT_EIG_TOL = 1e-12


def _xlogx(lam):
    lam = np.asarray(lam, float)
    out = np.zeros_like(lam)
    pos = lam > 0.0
    out[pos] = lam[pos] * np.log(lam[pos])
    return out


def entropy(algebra, rho) -> float:
    """Ent(rho) = tau(rho log rho), with the 0 log 0 = 0 convention."""
    lam, u = np.linalg.eigh(linalg.hermitize(rho))
    if lam[0] < -1e-10:
        raise ValueError(f"entropy of a non-PSD matrix (min eig {lam[0]:.2e})")
    ent_mat = (u * _xlogx(np.clip(lam, 0.0, None))) @ u.conj().T
    return float(algebra.trace(ent_mat).real)


def relative_entropy(algebra, rho, sigma) -> float:
    """Ent(rho || sigma); returns inf when the support condition fails."""
    lam_s, u_s = np.linalg.eigh(linalg.hermitize(sigma))
    kernel = lam_s < SUPPORT_EIG_TOL
    if kernel.any():
        p_ker = u_s[:, kernel]
        mass = float(
            np.real(np.trace(p_ker.conj().T @ np.asarray(rho, complex) @ p_ker))
        )
        if mass > 1e-10:
            return float("inf")
    log_s = (u_s * np.where(kernel, 0.0, np.log(np.where(kernel, 1.0, lam_s)))) \
        @ u_s.conj().T
    cross = float(algebra.trace(np.asarray(rho, complex) @ log_s).real)
    val = entropy(algebra, rho) - cross
    if val < -1e-10:
        raise linalg.LinalgError(f"relative entropy {val:.3e} < 0")
    return max(val, 0.0)


def entropy_fix(gen: LindbladGenerator, rho, tol=1e-9) -> float:
    """Entropy relative to the fixed-point algebra.

    Computed both as Ent(rho || E(rho)) and as Ent(rho) - Ent(E(rho));
    for a trace-preserving conditional expectation these agree, and the
    two paths are required to match within tol.
    """
    alg = gen.algebra
    e_rho = gen.fixed_point_data().expect(rho)
    direct = relative_entropy(alg, rho, e_rho)
    if not np.isfinite(direct):
        return direct
    difference = entropy(alg, rho) - entropy(alg, e_rho)
    if abs(direct - difference) > tol * (1.0 + abs(direct)):
        raise linalg.LinalgError(
            f"entropy_fix two-path disagreement: {direct} vs {difference}"
        )
    return direct


def fisher_information(gen: LindbladGenerator, rho, cross_check=True):
    """Entropy production I(rho) = tau((L rho) log rho).

    Full-support densities are evaluated directly and cross-checked
    against the Dirichlet-form expression sum_j <d_j rho, d_j log rho>.
    Degenerate densities are smoothed, rho_eps = (1-eps) rho + eps 1 for
    eps in {1e-4, 1e-5, 1e-6}, and extrapolated to eps = 0; inf is
    returned when the values diverge.
    """
    alg = gen.algebra
    lam = np.linalg.eigvalsh(linalg.hermitize(rho))
    if lam[0] > 1e-10:
        return _fisher_full_support(gen, rho, cross_check)
    eps_values = (1e-4, 1e-5, 1e-6)
    vals = []
    for eps in eps_values:
        rho_eps = (1.0 - eps) * np.asarray(rho, complex) + eps * alg.identity()
        vals.append(_fisher_full_support(gen, rho_eps, False))
    d1 = vals[1] - vals[0]
    d2 = vals[2] - vals[1]
    if abs(d2) > max(abs(d1), 1e-12):
        return float("inf")
    # one Richardson step on the geometric eps sequence
    extrap = vals[2] + d2 / 9.0
    return float(extrap)


def _fisher_full_support(gen, rho, cross_check):
    alg = gen.algebra
    log_rho = linalg.matrix_function(rho, np.log)
    l_rho = gen.apply(rho)
    val = float(alg.gns_inner(l_rho, log_rho).real)
    if cross_check:
        module = gen.tangent_module()
        alt = 0.0
        d_rho = module.derivative(rho)
        d_log = module.derivative(log_rho)
        alt = float(module.component_inner(d_rho, d_log).real)
        if abs(val - alt) > 1e-8 * (1.0 + abs(val)):
            raise linalg.LinalgError(
                f"Fisher information paths disagree: {val} vs {alt}"
            )
    if val < -1e-9:
        raise linalg.LinalgError(f"negative Fisher information {val:.3e}")
    return max(val, 0.0)


@dataclass
class FunctionalReport:
    model: str
    K: float
    points: list = field(default_factory=list)
    min_margin: float = float("inf")
    fitted_exponents: list = field(default_factory=list)
    runtime_ms: float = 0.0

    @property
    def passed(self):
        return self.min_margin >= -1e-8

    def to_json(self):
        return {
            "model": self.model, "K": self.K, "points": self.points,
            "min_margin": self.min_margin,
            "fitted_exponents": self.fitted_exponents,
            "pass": self.passed, "runtime_ms": self.runtime_ms,
        }


def fisher_decay_check(gen: LindbladGenerator, K: float, rhos=None,
                       t_grid=None, num_rho=10, seed=0) -> FunctionalReport:
    """Margins of I(P_t rho) <= exp(-2Kt) I(rho) over a time grid.

    Also fits the decay exponent of I(P_t rho) per sample by log-linear
    regression (values above 1e-12 only).
    """
    t0 = time.perf_counter()
    alg = gen.algebra
    if rhos is None:
        rng = np.random.default_rng(seed)
        rhos = [(f"wishart-{i}", alg.random_density(rng)) for i in range(num_rho)]
    if t_grid is None:
        t_grid = np.linspace(0.0, 5.0, 21)
    points = []
    min_margin = float("inf")
    exponents = []
    sg = gen.semigroup()
    for rho_id, rho in rhos:
        i0 = fisher_information(gen, rho)
        traj = []
        for t in t_grid:
            it = fisher_information(gen, sg.apply(t, rho), cross_check=False)
            margin = float(np.exp(-2.0 * K * t) * i0 - it)
            min_margin = min(min_margin, margin)
            points.append(
                {"t": float(t), "rho_id": rho_id, "fisher": it, "margin": margin}
            )
            traj.append((t, it))
        ts = np.array([t for t, v in traj if v > 1e-12])
        vs = np.array([v for t, v in traj if v > 1e-12])
        if len(ts) >= 3:
            slope = np.polyfit(ts, np.log(vs), 1)[0]
            exponents.append(float(-slope))
    return FunctionalReport(
        model=gen.label, K=float(K), points=points,
        min_margin=float(min_margin), fitted_exponents=exponents,
        runtime_ms=1000.0 * (time.perf_counter() - t0),
    )


@dataclass
class MlsiEstimate:
    value: float
    argmin_rho: np.ndarray
    num_samples: int
    seed: int

    def to_json(self):
        return {
            "value": self.value, "num_samples": self.num_samples,
            "seed": self.seed,
            "argmin_rho": linalg.matrix_to_json(self.argmin_rho),
        }


def mlsi_estimate(gen: LindbladGenerator, num_rho=40, seed=0,
                  descent_steps=25) -> MlsiEstimate:
    """Sampled infimum of I(rho) / Ent_fix(rho).

    This is an upper bound on the best modified log-Sobolev constant
    (the search is not exhaustive); samples with Ent_fix below 1e-10 are
    discarded, and the best sample is refined by coordinate descent on
    the Cholesky-type parametrization.
    """
    alg = gen.algebra
    rng = np.random.default_rng(seed)

    def ratio(rho):
        ent = entropy_fix(gen, rho)
        if not np.isfinite(ent) or ent <= 1e-10:
            return float("inf")
        return fisher_information(gen, rho, cross_check=False) / ent

    best = float("inf")
    best_rho = None
    count = 0
    for _ in range(num_rho):
        rho = alg.random_density(rng)
        r = ratio(rho)
        if np.isfinite(r):
            count += 1
            if r < best:
                best, best_rho = r, rho
    if best_rho is None:
        raise ValueError("no sample with positive distance to the fixed algebra")

    # local refinement
    n = alg.gns_dim
    from .gradest import _coordinate_descent, _density_from_params

    g0 = linalg.matrix_function(best_rho, np.sqrt)
    params = np.concatenate([alg.vec(g0).real, alg.vec(g0).imag])

    def objective(p):
        try:
            return ratio(_density_from_params(alg, p))
        except (ValueError, linalg.LinalgError):
            return float("inf")

    val, params = _coordinate_descent(objective, params, steps=descent_steps,
                                      step=0.1)
    if val < best:
        best, best_rho = val, _density_from_params(alg, params)
    return MlsiEstimate(value=float(best), argmin_rho=best_rho,
                        num_samples=count, seed=seed)


def entropy_trajectory(gen: LindbladGenerator, rho, t_grid):
    """(t, Ent, I) rows along the heat flow, for CSV export."""
    alg = gen.algebra
    sg = gen.semigroup()
    rows = []
    for t in t_grid:
        rt = sg.apply(t, rho)
        rows.append(
            (float(t), entropy(alg, rt),
             fisher_information(gen, rt, cross_check=False))
        )
    return rows
