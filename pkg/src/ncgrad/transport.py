"""Discretized noncommutative transport.

A path between densities is a grid rho_0 .. rho_N (uniform step
dt = 1/N) together with self-adjoint potentials phi_k solving the
discrete continuity equation

    A(rho_mid_k) phi_k = (rho_{k+1} - rho_k) / dt,

where A(sigma) = D^+ M(sigma) D is the metric form of the chosen mean
at the segment midpoint. The squared speed of segment k is
<phi_k, A phi_k>; summing sqrt's times dt gives the path length and
summing directly gives the energy. Optimizing interior grid points
yields upper bounds on the transport distance (the reported numbers are
discretized upper bounds; no convergence claim as N grows is made).

Endpoints are connectable only if their fixed-point-algebra
expectations agree; otherwise the continuity solve has no solution and
a :class:`NotConnectableError` is raised.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg, means
from .qms import LindbladGenerator

RESIDUAL_TOL = 1e-9
CONNECT_TOL = 1e-9


class NotConnectableError(ValueError):
    pass


def hermitian_basis(algebra):
    """GNS-orthonormal real basis of the Hermitian part of the algebra."""
    out = []
    d = algebra.dim
    offsets = np.cumsum([0] + algebra.block_dims[:-1]).tolist()
    for off, bd in zip(offsets, algebra.block_dims):
        for i in range(bd):
            e = np.zeros((d, d), dtype=complex)
            e[off + i, off + i] = 1.0
            out.append(e / algebra.gns_norm(e))
        for i in range(bd):
            for j in range(i + 1, bd):
                e = np.zeros((d, d), dtype=complex)
                e[off + i, off + j] = 1.0
                e[off + j, off + i] = 1.0
                out.append(e / algebra.gns_norm(e))
                e = np.zeros((d, d), dtype=complex)
                e[off + i, off + j] = 1j
                e[off + j, off + i] = -1j
                out.append(e / algebra.gns_norm(e))
    return out


def _metric_matrix(gen, mean, rho, basis):
    """Real symmetric PSD matrix of ||d phi||^2_rho in the Hermitian basis."""
    module = gen.tangent_module()
    form = means.metric_form(mean, module, rho)
    cols = np.stack([gen.algebra.gvec(h) for h in basis], axis=1)
    a = cols.conj().T @ form @ cols
    return np.real(linalg.hermitize(a))


def continuity_solve(gen: LindbladGenerator, mean, rho_a, rho_b, dt: float):
    """Minimal-norm potential phi with A(rho_mid) phi = (rho_b - rho_a)/dt.

    Raises :class:`NotConnectableError` when the right side is not in
    the range of the metric form (the endpoints have different
    fixed-point expectations).
    """
    alg = gen.algebra
    basis = hermitian_basis(alg)
    mid = 0.5 * (np.asarray(rho_a, complex) + np.asarray(rho_b, complex))
    a = _metric_matrix(gen, mean, mid, basis)
    delta = (np.asarray(rho_b, complex) - np.asarray(rho_a, complex)) / dt
    rhs = np.array([alg.gns_inner(h, delta).real for h in basis])
    x, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    residual = float(np.linalg.norm(a @ x - rhs))
    if residual > RESIDUAL_TOL * max(1.0, float(np.linalg.norm(rhs))):
        raise NotConnectableError(
            f"continuity equation has no solution (residual {residual:.3e}); "
            f"endpoint fixed-point expectations differ"
        )
    phi = sum(c * h for c, h in zip(x, basis))
    return phi, float(x @ (a @ x))


@dataclass
class TransportPath:
    densities: list
    potentials: list = None
    mean: str = "logarithmic"

    @property
    def n_segments(self):
        return len(self.densities) - 1

    def validate(self, gen: LindbladGenerator, tol=CONNECT_TOL):
        alg = gen.algebra
        fp = gen.fixed_point_data()
        ref = fp.expect(self.densities[0])
        for k, rho in enumerate(self.densities):
            if not alg.is_density(rho, tol=1e-8):
                raise ValueError(f"path point {k} is not a density")
            if alg.gns_norm(fp.expect(rho) - ref) > tol * (1 + alg.gns_norm(ref)):
                raise ValueError(f"path point {k} has a drifting fixed part")
        if self.potentials is not None:
            for k, phi in enumerate(self.potentials):
                if not linalg.is_hermitian(phi, 1e-9):
                    raise ValueError(f"potential {k} is not self-adjoint")


@dataclass
class ActionResult:
    length: float
    energy: float
    segment_energies: list = field(default_factory=list)


def action(gen: LindbladGenerator, path: TransportPath) -> ActionResult:
    """Length and energy of a path; length^2 <= energy by Cauchy-Schwarz,
    enforced as a sanity check on the discretization."""
    n = path.n_segments
    dt = 1.0 / n
    total_len = 0.0
    total_energy = 0.0
    energies = []
    for k in range(n):
        _, speed_sq = continuity_solve(
            gen, path.mean, path.densities[k], path.densities[k + 1], dt
        )
        speed_sq = max(speed_sq, 0.0)
        energies.append(speed_sq)
        total_len += np.sqrt(speed_sq) * dt
        total_energy += speed_sq * dt
    if total_len ** 2 > total_energy * (1.0 + 1e-10) + 1e-12:
        raise linalg.LinalgError("discrete length^2 exceeded energy")
    return ActionResult(float(total_len), float(total_energy), energies)


def _project_density(alg, x):
    """Clip eigenvalues at zero and renormalize the trace."""
    x = linalg.hermitize(alg.project(x))
    lam, u = np.linalg.eigh(x)
    x = (u * np.clip(lam, 0.0, None)) @ u.conj().T
    t = alg.trace(x).real
    if t <= 0:
        raise ValueError("cannot renormalize a vanishing state")
    return x / t


def linear_interpolation(alg, rho0, rho1, n_segments):
    pts = []
    for k in range(n_segments + 1):
        s = k / n_segments
        pts.append(_project_density(alg, (1 - s) * rho0 + s * rho1))
    return pts


@dataclass
class WBound:
    length: float
    energy: float
    path: TransportPath
    energy_trace: list
    n_segments: int
    iterations: int
    seed: int
    runtime_ms: float = 0.0

    def to_json(self):
        return {
            "length": self.length, "energy": self.energy,
            "n_segments": self.n_segments, "iterations": self.iterations,
            "seed": self.seed, "energy_trace": self.energy_trace,
            "densities": [linalg.matrix_to_json(r) for r in self.path.densities],
            "runtime_ms": self.runtime_ms,
        }


def w_upper_bound(gen: LindbladGenerator, mean, rho0, rho1, n_segments=8,
                  iters=30, seed=0, initial=None) -> WBound:
    """Upper bound on the transport distance by path optimization.

    Starts from the linear interpolation (or a supplied path), then runs
    coordinate descent on a Cholesky-type parametrization of the
    interior points, minimizing the discrete energy; the returned length
    of the optimized path bounds the discretized distance from above.
    Interior proposals keep the fixed-point expectation of the endpoints
    (a correction term restores it; proposals that leave the density
    cone are rejected).
    """
    t0 = time.perf_counter()
    mean = means.by_name(mean)
    alg = gen.algebra
    fp = gen.fixed_point_data()
    mu = fp.expect(rho0)
    if alg.gns_norm(mu - fp.expect(rho1)) > CONNECT_TOL * (1 + alg.gns_norm(mu)):
        raise NotConnectableError(
            "endpoints have different fixed-point expectations"
        )
    if initial is None:
        pts = linear_interpolation(alg, rho0, rho1, n_segments)
    else:
        pts = [np.asarray(p, complex) for p in initial]
        n_segments = len(pts) - 1

    dt = 1.0 / n_segments
    basis = hermitian_basis(alg)

    def seg_energy(ra, rb):
        mid = 0.5 * (ra + rb)
        a = _metric_matrix(gen, mean, mid, basis)
        delta = (rb - ra) / dt
        rhs = np.array([alg.gns_inner(h, delta).real for h in basis])
        x, *_ = np.linalg.lstsq(a, rhs, rcond=None)
        if np.linalg.norm(a @ x - rhs) > RESIDUAL_TOL * max(
            1.0, float(np.linalg.norm(rhs))
        ):
            return float("inf")
        return float(x @ (a @ x))

    def total_energy(points):
        return sum(seg_energy(points[k], points[k + 1]) for k in range(n_segments)) * dt

    energy = total_energy(pts)
    trace = [energy]
    rng = np.random.default_rng(seed)
    n = alg.gns_dim

    def reconstruct(params):
        g = alg.unvec(params[:n] + 1j * params[n:])
        rho = g @ g.conj().T + 1e-12 * np.eye(alg.dim)
        rho = rho / alg.trace(rho).real
        # restore the fixed part; reject proposals outside the cone
        rho = rho + (mu - fp.expect(rho))
        lam = np.linalg.eigvalsh(linalg.hermitize(rho))
        if lam[0] < -1e-12:
            return None
        return _project_density(alg, rho)

    for _ in range(iters):
        improved = False
        for k in range(1, n_segments):
            g0 = linalg.matrix_function(
                pts[k] + 1e-12 * np.eye(alg.dim), np.sqrt
            )
            params = np.concatenate([alg.vec(g0).real, alg.vec(g0).imag])
            local = seg_energy(pts[k - 1], pts[k]) + seg_energy(pts[k], pts[k + 1])
            step = 0.1 * (1.0 + float(np.linalg.norm(params)))
            for _ in range(4):
                moved = False
                for i in rng.permutation(2 * n):
                    for sign in (1.0, -1.0):
                        trial = params.copy()
                        trial[i] += sign * step
                        cand = reconstruct(trial)
                        if cand is None:
                            continue
                        val = seg_energy(pts[k - 1], cand) + seg_energy(
                            cand, pts[k + 1]
                        )
                        if val < local - 1e-14:
                            local, params, moved = val, trial, True
                            pts[k] = cand
                            break
                if not moved:
                    step *= 0.5
                    if step < 1e-6:
                        break
                else:
                    improved = True
        energy = total_energy(pts)
        trace.append(energy)
        if not improved:
            break

    path = TransportPath(densities=pts, mean=mean.name)
    act = action(gen, path)
    return WBound(
        length=act.length, energy=act.energy, path=path, energy_trace=trace,
        n_segments=n_segments, iterations=len(trace) - 1, seed=seed,
        runtime_ms=1000.0 * (time.perf_counter() - t0),
    )


def refine_path(points):
    """Insert segment midpoints, doubling the grid resolution."""
    out = []
    for k in range(len(points) - 1):
        out.append(points[k])
        out.append(0.5 * (points[k] + points[k + 1]))
    out.append(points[-1])
    return out


def heat_flow_entropy_link(gen: LindbladGenerator, rho, t_grid, h=1e-4):
    """Margins of the identity d/dt Ent(P_t rho) = -I(P_t rho).

    Central finite differences of the entropy along the flow are
    compared with the Fisher information; the discrepancy links the
    transport picture to entropy production without asserting the
    evolution variational inequality.
    """
    from .entfun import entropy, fisher_information

    sg = gen.semigroup()
    alg = gen.algebra
    rows = []
    for t in t_grid:
        e_plus = entropy(alg, sg.apply(t + h, rho))
        e_minus = entropy(alg, sg.apply(max(t - h, 0.0), rho))
        width = (t + h) - max(t - h, 0.0)
        deriv = (e_plus - e_minus) / width
        fisher = fisher_information(gen, sg.apply(t, rho), cross_check=False)
        rows.append({"t": float(t), "dEnt_dt": float(deriv),
                     "fisher": float(fisher), "gap": float(deriv + fisher)})
    return rows
