"""Fast invariant suites for every module, with a machine-readable summary."""
from __future__ import annotations

import os
import tempfile
import time

import numpy as np

from . import gevrey, linear, littlewood_paley as lp, solver, spectral
from .spectral import Grid3, State, Viscosities

SUITES = ("core", "lp", "linear", "solver", "gevrey")


def _check(name: str, value: float, limit: float, le: bool = True) -> dict:
    ok = bool(value <= limit) if le else bool(value >= limit)
    return {"name": name, "value": float(value), "limit": float(limit), "passed": ok}


def _random_state(grid: Grid3, rng, band: float | None = None) -> State:
    u = spectral.leray_project(grid, spectral.random_real_field(grid, rng, vector=True))
    om = spectral.random_real_field(grid, rng, vector=True)
    u[:, 0, 0, 0] = 0.0
    om[:, 0, 0, 0] = 0.0
    if band is not None:
        keep = grid.xi_norm <= band
        u, om = u * keep, om * keep
    return State(grid, u, om)


def suite_core(rng) -> list[dict]:
    g = Grid3(16)
    f = rng.standard_normal((3,) + g.shape)
    c = spectral.forward(f)
    out = [
        _check("fft_round_trip", np.max(np.abs(spectral.to_physical_real(c) - f)), 1e-12),
        _check("hermitian_symmetry", spectral.hermitian_defect(c), 1e-14),
    ]
    p = spectral.leray_project(g, c)
    out.append(_check("leray_divergence", spectral.divergence_defect(g, p), 1e-12))
    out.append(_check("leray_idempotent", np.max(np.abs(spectral.leray_project(g, p) - p)), 1e-12))
    grad = spectral.gradient(g, c[0])
    out.append(_check("curl_grad_zero", np.max(np.abs(spectral.curl(g, grad))), 1e-12))
    out.append(_check("parseval", abs(spectral.lp_norm(c, 2) - spectral.lp_norm_physical(f, 2)) / spectral.lp_norm(c, 2), 1e-12))
    state = State(g, p, c, 0.5)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "s.mps")
        spectral.save_snapshot(state, path)
        back = spectral.load_snapshot(path)
    err = max(np.max(np.abs(back.u - state.u)), np.max(np.abs(back.omega - state.omega)))
    out.append(_check("snapshot_round_trip", err, 0.0))
    return out


def suite_lp(rng) -> list[dict]:
    g = Grid3(32)
    part = lp.DyadicPartition(g)
    s = part.partition_sum()
    s[0, 0, 0] = 1.0
    out = [_check("partition_of_unity", np.max(np.abs(s - 1)), 1e-10)]
    worst = 0.0
    for _ in range(5):
        a = spectral.dealias(g, spectral.random_real_field(g, rng))
        b = spectral.dealias(g, spectral.random_real_field(g, rng))
        a[0, 0, 0] = b[0, 0, 0] = 0.0
        t_ab, t_ba, r = lp.bony_decompose(part, a, b)
        ref = lp.dealiased_product(g, a, b)
        worst = max(worst, np.max(np.abs(t_ab + t_ba + r - ref)) / np.max(np.abs(ref)))
    out.append(_check("bony_identity", worst, 1e-10))
    lo, hi = np.inf, 0.0
    for j in range(0, 3):
        f = part.weight(j) * spectral.random_real_field(g, rng)
        ratio = lp.bernstein_ratio(part, f, j, 2.0)
        lo, hi = min(lo, ratio), max(hi, ratio)
    out.append(_check("bernstein_upper", hi, 8 / 3 * 2))
    out.append(_check("bernstein_lower", lo, 3 / 4 / 2, le=False))
    return out


def suite_linear(rng) -> list[dict]:
    visc_rng = rng.uniform(0.1, 2.0, (200, 4))
    worst = 0.0
    for nu, chi, mu, ka in visc_rng:
        v = Viscosities(nu, chi, mu, ka)
        xi = rng.uniform(0.0, 10.0)
        ev = linear.eigenvalues(xi, v)
        ref = np.sort(np.linalg.eigvals(linear.SymbolMatrix(xi, v).entries).real)
        got = np.array([float(np.real(ev.lambda_minus)), float(np.real(ev.lambda_plus))])
        worst = max(worst, np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-300)))
    out = [_check("eigenvalue_closed_form", worst, 1e-10)]
    g = Grid3(8)
    v = Viscosities(0.7, 0.4, 1.3, 0.9)
    st = _random_state(g, rng)
    u, om = linear.propagate_fields(g, st.u, st.omega, 0.7, v)
    err = 0.0
    for idx in [(1, 2, 3), (0, 1, 0), (3, 3, 1), (7, 2, 5)]:
        xi = np.array([g.k1d[i] * g.dk for i in idx])
        ru, rw = linear.dense_mode_propagate(xi, st.u[(slice(None),) + idx], st.omega[(slice(None),) + idx], 0.7, v, dps=20)
        scale = np.max(np.abs(np.concatenate([ru, rw])))
        err = max(err, np.max(np.abs(np.concatenate([u[(slice(None),) + idx] - ru, om[(slice(None),) + idx] - rw]))) / scale)
    out.append(_check("propagator_vs_dense", err, 1e-10))
    u2, om2 = linear.propagate_fields(g, *linear.propagate_fields(g, st.u, st.omega, 0.3, v), 0.4, v)
    scale = np.max(np.abs(u))
    out.append(_check("semigroup", max(np.max(np.abs(u2 - u)), np.max(np.abs(om2 - om))) / scale, 1e-11))
    g32 = Grid3(32)
    st = _random_state(g32, rng, band=2.0)
    out.append(_check("effective_velocity_residual", linear.effective_velocity_residual(st, Viscosities.normalized()), 1e-6))
    return out


def suite_solver(rng) -> list[dict]:
    g = Grid3(16)
    st = solver.taylor_green(g, 1.0)
    f, _ = solver.nonlinear_rhs(st)
    conv = solver.convective_velocity_rhs(st)
    out = [_check("conservative_vs_convective", np.max(np.abs(f - conv)), 1e-11)]
    zero = solver.simulate(State.zeros(g), solver.SolverConfig(dt=0.05, t_end=0.2, snapshot_times=[0.2]))
    out.append(_check("zero_stays_zero", np.max(np.abs(zero.snapshots[-1].u)), 0.0))
    data = solver.random_slope(g, 1.5, 0.5, band=(0.0, 3.0), seed=int(rng.integers(1 << 30)))
    cfg = solver.SolverConfig(dt=0.05, t_end=0.5, snapshot_times=[0.5], norm_times=list(np.linspace(0, 0.5, 11)))
    res = solver.simulate(data, cfg)
    e = res.series.array("E")
    out.append(_check("energy_nonincreasing", float(np.max(np.diff(e) / e[:-1])), 1e-9))
    out.append(_check("divergence_free", spectral.divergence_defect(g, res.snapshots[-1].u), 1e-10))
    v0 = Viscosities(0.5, 0.0, 1.0, 1.0)
    red = solver.simulate(solver.taylor_green(g), solver.SolverConfig(dt=0.05, t_end=0.3, visc=v0, snapshot_times=[0.3]))
    out.append(_check("reduction_omega_zero", np.max(np.abs(red.snapshots[-1].omega)), 1e-14))
    return out


def suite_gevrey(rng) -> list[dict]:
    g = Grid3(32)
    part = lp.DyadicPartition(g)
    out = [_check("C1_value", abs(gevrey.smoothing_constant(1.0) - 70.08), 0.01)]
    fit = gevrey.radius_fit(g, np.exp(-0.3 * g.xi_norm) + 0j, (2, 10))
    out.append(_check("radius_exact", abs(fit.radius_estimate - 0.3), 1e-6))
    rep = gevrey.smoothing_constant_check(part, 1.0, 1.0, trials=10, rng=rng)
    out.append(_check("smoothing_ratio_over_Cm", rep["worst_ratio"] / rep["C_m"], 1.0))
    eq = gevrey.multiplier_equiv_check(part, 1.0, 2, trials=5, rng=rng)
    out.append(_check("equivalence_constants", max(eq["inv_C1"], eq["C2"]), 10.0))
    bl = gevrey.bilinear_symbol_check([0.1, 1.0, 10.0], 1.0, 1.0, 2.0, 0, 2, 500)
    out.append(_check("bilinear_bound", max(max(r["xi_bound"], r["eta_bound"]) for r in bl["rows"]), 16.0))
    return out


_RUNNERS = {
    "core": suite_core,
    "lp": suite_lp,
    "linear": suite_linear,
    "solver": suite_solver,
    "gevrey": suite_gevrey,
}


def verify(suite: str = "all", seed: int = 0) -> dict:
    """Run one suite (or all); ``passed`` is False if any named invariant fails."""
    names = SUITES if suite == "all" else (suite,)
    if any(n not in _RUNNERS for n in names):
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES + ('all',)}")
    rng = np.random.default_rng(seed)
    results = {}
    start = time.perf_counter()
    for name in names:
        t0 = time.perf_counter()
        try:
            checks = _RUNNERS[name](rng)
        except Exception as exc:  # report, do not crash the harness
            checks = [{"name": "suite_error", "passed": False, "error": f"{type(exc).__name__}: {exc}"}]
        results[name] = {
            "checks": checks,
            "passed": all(c["passed"] for c in checks),
            "failed": [c["name"] for c in checks if not c["passed"]],
            "seconds": time.perf_counter() - t0,
        }
    return {
        "suite": suite,
        "passed": all(r["passed"] for r in results.values()),
        "suites": results,
        "seconds": time.perf_counter() - start,
    }
