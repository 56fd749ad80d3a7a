"""Acceptance suite: the quantitative exit criteria of the artifact.

Each criterion is a callable returning a :class:`CriterionResult`; the
pytest module asserts them one by one and the CLI ``reproduce`` command
prints the summary table. Tolerances are pinned here, not configurable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import entfun, gradest, linalg, means, transport, zoo
from .gradest import GESampler, OptimalKSearch
from .qms import verify_qms


@dataclass
class CriterionResult:
    cid: int
    title: str
    passed: bool
    details: str
    seconds: float


def _result(cid, title, passed, details, t0):
    return CriterionResult(cid, title, bool(passed), details,
                           time.perf_counter() - t0)


def criterion_1():
    """Depolarizing on M_2 and M_3: exact check at K = 1/2, with ancilla."""
    t0 = time.perf_counter()
    details = []
    ok = True
    for d in (2, 3):
        gen = zoo.depolarizing_model(d)
        rep = gradest.ge_check(
            gen, "logarithmic", 0.5,
            GESampler(num_rho=50, t_grid=(40, 1e-3, 10.0), seed=101 + d),
            mode="exact",
        )
        ok &= rep.global_min >= -1e-8
        details.append(f"M_{d} exact min {rep.global_min:.2e}")
        crep = gradest.cge_check(
            gen, "logarithmic", 0.5, ancilla_dims=(2,),
            sampler=GESampler(num_rho=20, t_grid=(15, 1e-3, 10.0), seed=17 + d),
        )
        ok &= crep.global_min >= -1e-8
        details.append(f"M_{d} (x) M_2 min {crep.global_min:.2e}")
    return _result(1, "depolarizing gradient estimate at K = 1/2", ok,
                   "; ".join(details), t0)


def criterion_2():
    """Single projection in M_2: optimal constant is 1 for the log mean."""
    t0 = time.perf_counter()
    gen = zoo.projection_model()
    res = gradest.optimal_k_global(
        gen, "logarithmic",
        OptimalKSearch(t_grid=(40, 1e-3, 10.0), num_restarts=5,
                       descent_steps=25, refine_top=3, seed=5),
    )
    ok = 0.999 <= res.value <= 1.0 + 1e-6
    return _result(2, "projection model optimal constant",
                   ok, f"K* = {res.value:.9f} at t = {res.t:.4g}", t0)


def criterion_3():
    """Commuting projections in M_4 and hypercube d = 2 at K = 1."""
    t0 = time.perf_counter()
    details = []
    ok = True
    for gen in (zoo.commproj4_model(), zoo.hypercube_model(2)):
        for mean in ("logarithmic", "arithmetic"):
            rep = gradest.ge_check(
                gen, mean, 1.0,
                GESampler(num_rho=30, t_grid=(20, 1e-3, 10.0), seed=23),
                mode="exact",
            )
            ok &= rep.global_min >= -1e-8
            details.append(f"{gen.label}/{mean} min {rep.global_min:.2e}")
        fail = gradest.ge_check(
            gen, "logarithmic", 1.1,
            GESampler(num_rho=10, t_grid=(10, 1e-2, 5.0), seed=29),
            mode="exact",
        )
        ok &= (not fail.passed) and fail.witness is not None
        details.append(f"{gen.label} K=1.1 detected min {fail.global_min:.2e}")
    return _result(3, "commuting projections and hypercube at K = 1", ok,
                   "; ".join(details), t0)


def criterion_4():
    """Z_4 and Z_6: word-length eigenrelation, estimate at K = 1, ancilla."""
    t0 = time.perf_counter()
    details = []
    ok = True
    model4, gen4 = zoo.cyclic_group_model(4)
    model6, gen6 = zoo.cyclic_group_model(6)
    ok &= model4.eigen_relation_residual <= 1e-10
    ok &= model6.eigen_relation_residual <= 1e-10
    ok &= np.array_equal(model4.psi.astype(int), [0, 1, 2, 1])
    ok &= np.array_equal(model6.psi.astype(int), [0, 1, 2, 3, 2, 1])
    details.append(
        f"eigenrelation residuals {model4.eigen_relation_residual:.1e}, "
        f"{model6.eigen_relation_residual:.1e}"
    )
    rep4 = gradest.ge_check(
        gen4, "logarithmic", 1.0,
        GESampler(num_rho=25, t_grid=(15, 1e-3, 10.0), seed=31), mode="exact",
    )
    ok &= rep4.global_min >= -1e-8
    details.append(f"Z4 exact min {rep4.global_min:.2e}")
    rep6 = gradest.ge_check(
        gen6, "logarithmic", 1.0,
        GESampler(num_rho=20, t_grid=(10, 1e-3, 10.0), seed=37), mode="sampled",
    )
    ok &= len(rep6.points) >= 200 and rep6.global_min >= -1e-8
    details.append(f"Z6 sampled {len(rep6.points)} pts min {rep6.global_min:.2e}")
    crep = gradest.cge_check(
        gen4, "logarithmic", 1.0, ancilla_dims=(2,),
        sampler=GESampler(num_rho=15, t_grid=(10, 1e-3, 10.0), seed=41),
    )
    ok &= crep.global_min >= -1e-8
    details.append(f"Z4 (x) M_2 min {crep.global_min:.2e}")
    return _result(4, "cyclic group models", ok, "; ".join(details), t0)


def criterion_5():
    """S_3: Hamming eigenrelations and the estimate at K = 1/2."""
    t0 = time.perf_counter()
    model, gen = zoo.symmetric_group_model(3)
    ok = model.eigen_relation_residual <= 1e-10
    ok &= sorted(model.psi.astype(int).tolist()) == [0, 2, 2, 2, 3, 3]
    rep = gradest.ge_check(
        gen, "logarithmic", 0.5,
        GESampler(num_rho=20, t_grid=(10, 1e-3, 10.0), seed=43), mode="sampled",
    )
    ok &= len(rep.points) >= 200 and rep.global_min >= -1e-8
    return _result(
        5, "symmetric group S_3 at K = 1/2", ok,
        f"eigenrelation residual {model.eigen_relation_residual:.1e}; "
        f"{len(rep.points)} sampled pts min {rep.global_min:.2e}", t0,
    )


def two_point_oracle(mean, p0=1.0 / 3.0, n_u=2000, n_t=200):
    """Dense-grid optimal constant for the two-point model.

    Closed scalar form: with density values r = (u/p0, (1-u)/p1) and
    flow r_t = exp(-t) r + 1 - exp(-t),

        K*(t, u) = 1 + log(m_sym(r_t) / m_sym(r)) / (2t),

    minimized over the (t, u) grid. Independent of the matrix pipeline.
    """
    mean = means.by_name(mean)
    p1 = 1.0 - p0
    u = np.linspace(1e-4, 1.0 - 1e-4, n_u)
    r0 = u / p0
    r1 = (1.0 - u) / p1

    def msym(a, b):
        return 0.5 * (mean.kernel(a, b) + mean.kernel(b, a))

    base = msym(r0, r1)
    best = np.inf
    for t in np.geomspace(1e-3, 10.0, n_t):
        e = np.exp(-t)
        m_t = msym(e * r0 + 1 - e, e * r1 + 1 - e)
        k = 1.0 + np.log(m_t / base) / (2.0 * t)
        best = min(best, float(k.min()))
    return best


def criterion_6():
    """Mean dependence of the optimal constant on the two-point model."""
    t0 = time.perf_counter()
    gen = zoo.two_point_model()
    values = {}
    oracles = {}
    config = OptimalKSearch(t_grid=(40, 1e-3, 10.0), num_restarts=8,
                            descent_steps=80, refine_top=6, seed=3)
    for mean in ("logarithmic", "arithmetic"):
        values[mean] = gradest.optimal_k_global(gen, mean, config).value
        oracles[mean] = two_point_oracle(mean)
    sep = abs(values["logarithmic"] - values["arithmetic"])
    ok = sep > 1e-3
    for mean in values:
        ok &= abs(values[mean] - oracles[mean]) < 1e-3
    return _result(
        6, "optimal constant depends on the mean (two-point)", ok,
        f"log {values['logarithmic']:.6f} (oracle {oracles['logarithmic']:.6f}), "
        f"ari {values['arithmetic']:.6f} (oracle {oracles['arithmetic']:.6f})", t0,
    )


def criterion_7():
    """Tensor stability at K = 1/2."""
    t0 = time.perf_counter()
    dep = zoo.depolarizing_model(2)
    proj = zoo.projection_model()
    details = []
    ok = True
    for g1, g2 in ((dep, dep), (proj, dep)):
        rep = gradest.tensor_ge_harness(
            g1, g2, "logarithmic", 0.5,
            GESampler(num_rho=20, t_grid=(12, 1e-3, 10.0), seed=53),
            mode="exact",
        )
        ok &= rep.global_min >= -1e-8
        details.append(f"{rep.model} min {rep.global_min:.2e}")
    return _result(7, "tensor products at K = min(K1, K2)", ok,
                   "; ".join(details), t0)


def criterion_8():
    """Intertwining conditions for the depolarizing semigroup."""
    t0 = time.perf_counter()
    gen = zoo.depolarizing_model(2)
    module = gen.tangent_module()
    dim_h = module.n_components * gen.algebra.dim ** 2
    rep = gradest.intertwine_check(
        gen, K=0.5, candidate=lambda t: np.exp(-t) * np.eye(dim_h),
        num_t=5, num_rho=4, seed=59,
    )
    ok = (
        rep.condition_i_residual <= 1e-9
        and rep.condition_ii_min >= -1e-9
        and rep.condition_iii_min >= -1e-9
        and len(rep.points) >= 20
    )
    return _result(
        8, "intertwining with exp(-t) id on the module", ok,
        f"(i) residual {rep.condition_i_residual:.1e}, margins "
        f"{rep.condition_ii_min:.2e}/{rep.condition_iii_min:.2e} "
        f"on {len(rep.points)} points", t0,
    )


def criterion_9():
    """Fisher decay and the modified log-Sobolev bound for depolarizing."""
    t0 = time.perf_counter()
    gen = zoo.depolarizing_model(2)
    rep = entfun.fisher_decay_check(
        gen, 0.5, num_rho=30, t_grid=np.linspace(0.0, 5.0, 26), seed=61
    )
    ok = rep.min_margin >= -1e-8
    est = entfun.mlsi_estimate(gen, num_rho=40, seed=67)
    ok &= est.value >= 1.0 - 1e-6
    rho = np.diag([1.5, 0.5]).astype(complex)
    spot = entfun.fisher_information(gen, rho)
    ok &= abs(spot - 0.25 * np.log(3.0)) <= 1e-10
    return _result(
        9, "Fisher decay, MLSI estimate, analytic spot value", ok,
        f"min margin {rep.min_margin:.2e}; MLSI est {est.value:.6f}; "
        f"I(diag(3/2,1/2)) = {spot:.12f} vs {0.25 * np.log(3.0):.12f}", t0,
    )


def criterion_10():
    """Log-mean multiplier vs Gauss-Legendre quadrature; axiom audits."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(71)
    nodes, weights = np.polynomial.legendre.leggauss(64)
    s_nodes = 0.5 * (nodes + 1.0)
    s_weights = 0.5 * weights
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 5))
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = g @ g.conj().T
        rho = rho / (np.trace(rho).real / d)
        xi = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        lam, u = np.linalg.eigh(rho)
        quad = np.zeros((d, d), dtype=complex)
        for s, w in zip(s_nodes, s_weights):
            rs = (u * lam ** s) @ u.conj().T
            r1s = (u * lam ** (1.0 - s)) @ u.conj().T
            quad += w * (rs @ xi @ r1s)
        direct = means.rho_hat_apply("logarithmic", rho, xi[None, :, :])[0]
        err = linalg.frobenius(direct - quad) / (1.0 + linalg.frobenius(quad))
        worst = max(worst, err)
    ok = worst <= 1e-8
    margins = {}
    for name in means.BUILTIN_MEANS:
        audit = means.mean_axiom_audit(name, samples=15, dim=3, seed=73)
        margins[name] = min(audit.matrix_monotonicity_margin,
                            audit.transformer_margin)
        ok &= audit.passed and margins[name] >= -1e-9
    worst_margin = min(margins.values())
    return _result(
        10, "multiplier vs quadrature; mean axiom audits", ok,
        f"quadrature err {worst:.2e}; worst audit margin {worst_margin:.2e}", t0,
    )


def criterion_11():
    """Transport bounds: zero distance, oracle match, refinement, errors."""
    t0 = time.perf_counter()
    details = []
    gen = zoo.two_point_model()
    alg = gen.algebra
    rho = np.diag([1.8, 0.6]).astype(complex)  # tau = 1.8/3 + 0.6*2/3 = 1
    same = transport.w_upper_bound(gen, "logarithmic", rho, rho,
                                   n_segments=4, iters=5, seed=79)
    ok = same.length <= 1e-8
    details.append(f"W(rho,rho) = {same.length:.2e}")

    rho1 = np.diag([0.3, 1.35]).astype(complex)
    bound = transport.w_upper_bound(gen, "logarithmic", rho, rho1,
                                    n_segments=16, iters=25, seed=83)
    oracle = _two_point_w_oracle("logarithmic", 1.0 / 3.0, rho, rho1)
    ok &= abs(bound.length - oracle) <= 0.02 * oracle
    details.append(f"two-point W {bound.length:.6f} vs oracle {oracle:.6f}")

    refined = transport.w_upper_bound(
        gen, "logarithmic", rho, rho1, iters=25, seed=83,
        initial=transport.refine_path(bound.path.densities),
    )
    ok &= refined.length <= bound.length + 1e-6
    details.append(f"refined {refined.length:.6f}")

    proj = zoo.projection_model()
    rng = np.random.default_rng(89)
    ra = proj.algebra.random_density(rng)
    rb = proj.algebra.random_density(rng)
    try:
        transport.w_upper_bound(proj, "logarithmic", ra, rb,
                                n_segments=4, iters=2, seed=97)
        ok = False
        details.append("non-connectable pair NOT rejected")
    except transport.NotConnectableError:
        details.append("non-connectable pair rejected")
    return _result(11, "transport upper bounds", ok, "; ".join(details), t0)


def _two_point_w_oracle(mean, p0, rho_a, rho_b, grid=40000):
    """W on the two-point space as a 1-d integral (dense-grid trapezoid).

    With mass coordinate u (weight of site 0) the speed of a monotone
    path is |du| * sqrt((1/(p0 p1)) / m_sym(r(u))); integrate between
    the endpoint masses.
    """
    mean = means.by_name(mean)
    p1 = 1.0 - p0
    ua = float(np.real(rho_a[0, 0])) * p0
    ub = float(np.real(rho_b[0, 0])) * p0
    u = np.linspace(min(ua, ub), max(ua, ub), grid)
    r0 = u / p0
    r1 = (1.0 - u) / p1
    m = 0.5 * (mean.kernel(r0, r1) + mean.kernel(r1, r0))
    integrand = np.sqrt(1.0 / (p0 * p1 * m))
    return float(np.trapezoid(integrand, u))


def criterion_12():
    """Structural invariants for every model in the catalog."""
    t0 = time.perf_counter()
    details = []
    ok = True
    for name, (builder, _) in zoo.CATALOG.items():
        if name in ("symmetric4", "hypercube3", "cyclic8"):
            continue  # exercised in slow tests; invariants identical
        gen = builder()
        rep = verify_qms(gen, raise_on_failure=False)
        ok &= rep.ok
        # Dirichlet identity: generator equals D^+ D
        module = gen.tangent_module()
        dd = np.zeros((gen.algebra.gns_dim,) * 2, dtype=complex)
        for dj in module.d_matrices:
            dd += dj.conj().T @ dj
        ok &= linalg.rel_close(dd, gen.superop_gns, 1e-10)
        ok &= gen.eig().eigenvalues[0] >= -1e-9
        if not rep.ok:
            details.append(f"{name}: {[c['property'] for c in rep.failed()]}")
    for name in ("depolarizing2", "depolarizing3", "projection2"):
        gap = zoo.build(name).fixed_point_data().spectral_gap
        ok &= abs(gap - 1.0) <= 1e-9
        details.append(f"{name} gap {gap:.2e}")
    return _result(12, "structural invariants across the catalog", ok,
                   "; ".join(details) or "all pass", t0)


ALL_CRITERIA = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
    criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
    criterion_11, criterion_12,
]


def run_all(selection=None):
    results = []
    for i, fn in enumerate(ALL_CRITERIA, start=1):
        if selection and i not in selection:
            continue
        results.append(fn())
    return results
