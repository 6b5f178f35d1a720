"""Integrating-factor Runge-Kutta solver for the full micropolar system.

The stiff coupled linear part is advanced exactly by the per-mode
propagator of :mod:`micropolar.linear`; only the quadratic terms

    f = -P div(u (x) u),    g = -(u . grad) omega

go through the Runge-Kutta stages.  Every product is dealiased with the
cubic 2/3 rule and the state is kept inside the 2/3 band, so the scheme is a
Galerkin truncation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .linear import LinearFlow, apply_entries, check_divergence_free, grid_entries
from .littlewood_paley import BesovSpec, DyadicPartition, NormSeries, besov_norm, block_norms, lq_sum
from .spectral import (
    Grid3,
    State,
    Viscosities,
    apply_symbol,
    curl,
    energy,
    enforce_hermitian,
    forward,
    from_physical_real,
    helmholtz_split,
    leray_project,
    lp_norm,
    to_physical_real,
)

log = logging.getLogger(__name__)

INTEGRATORS = ("if_rk2", "if_rk4")


class CFLError(ValueError):
    def __init__(self, dt: float, suggested_dt: float):
        super().__init__(f"time step {dt:.4g} violates the CFL bound; use dt <= {suggested_dt:.4g}")
        self.dt = dt
        self.suggested_dt = suggested_dt


class BlowUpError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    dt: float
    t_end: float
    integrator: str = "if_rk4"
    visc: Viscosities = field(default_factory=Viscosities.normalized)
    snapshot_times: list[float] = field(default_factory=list)
    norm_times: list[float] | None = None
    norm_requests: list[tuple[float, float]] = field(default_factory=lambda: [(0.0, 2.0)])
    j0: int = 0
    besov_p: float = 2.0
    besov_q: float = 1.0
    nonlinear: bool = True
    cfl: float = 0.5
    blowup_factor: float = 10.0

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        for t in self.snapshot_times + list(self.norm_times or []):
            if not 0 <= t <= self.t_end:
                raise ValueError(f"output time {t} outside [0, t_end]")

    @property
    def output_times(self) -> list[float]:
        norm_times = self.snapshot_times if self.norm_times is None else self.norm_times
        return sorted(set(self.snapshot_times) | set(norm_times))


# ---------------------------------------------------------------------------
# nonlinear terms

def _product_to_spectral(grid: Grid3, prod: np.ndarray) -> np.ndarray:
    return from_physical_real(prod) * grid.dealias_mask


def nonlinear_rhs(state: State) -> tuple[np.ndarray, np.ndarray]:
    """``f = -P div(u (x) u)`` (conservative) and ``g = -(u . grad) omega``."""
    grid = state.grid
    x = grid.xi
    u = to_physical_real(state.u * grid.dealias_mask)
    f = grid.zeros(True)
    for i in range(3):
        for j in range(i, 3):
            uu = _product_to_spectral(grid, u[i] * u[j])
            f[i] -= 1j * x[j] * uu
            if j != i:
                f[j] -= 1j * x[i] * uu
    f = leray_project(grid, f)
    om = state.omega * grid.dealias_mask
    conv = np.zeros((3,) + grid.shape)
    for j in range(3):
        d_om = to_physical_real(1j * x[j] * om)
        conv += u[j] * d_om
    g = -_product_to_spectral(grid, conv)
    return f, g


def convective_velocity_rhs(state: State) -> np.ndarray:
    """``-P[(u . grad) u]``: the convective form, kept as a cross-check."""
    grid = state.grid
    u = to_physical_real(state.u * grid.dealias_mask)
    conv = np.zeros((3,) + grid.shape)
    for j in range(3):
        conv += u[j] * to_physical_real(1j * grid.xi[j] * state.u * grid.dealias_mask)
    return -leray_project(grid, _product_to_spectral(grid, conv))


# ---------------------------------------------------------------------------
# time stepping

class _Propagators:
    """Cache of exact linear propagators keyed by step length."""

    def __init__(self, grid: Grid3, visc: Viscosities):
        self.grid = grid
        self.visc = visc
        self._cache = {}

    def __call__(self, h: float, u: np.ndarray, om: np.ndarray):
        if h == 0:
            return u, om
        if h not in self._cache:
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[h] = grid_entries(self.grid, h, self.visc)
        return _apply_entries(self.grid, self._cache[h], u, om)


def _apply_entries(grid: Grid3, entries, u, om):
    p_om, q_om = helmholtz_split(grid, om)
    return apply_entries(grid, entries, u, curl(grid, p_om), q_om)


def max_velocity(state: State) -> float:
    u = to_physical_real(state.u)
    return float(np.sqrt(np.max(np.sum(u * u, axis=0))))


def cfl_dt(state: State, cfl: float = 0.5) -> float:
    umax = max_velocity(state)
    if umax == 0:
        return np.inf
    return cfl / (umax * state.grid.kmax_dealiased)


def _clean(grid: Grid3, u, om):
    mask = grid.dealias_mask
    u = enforce_hermitian(leray_project(grid, u * mask))
    om = enforce_hermitian(om * mask)
    return u, om


def _nl(grid, u, om):
    return nonlinear_rhs(State(grid, u, om))


def _lawson_rk2(grid, prop, h, u, om):
    k1u, k1w = _nl(grid, u, om)
    eu, ew = prop(h, u + h * k1u, om + h * k1w)
    k2u, k2w = _nl(grid, eu, ew)
    base_u, base_w = prop(h, u, om)
    ek1u, ek1w = prop(h, k1u, k1w)
    return base_u + 0.5 * h * (ek1u + k2u), base_w + 0.5 * h * (ek1w + k2w)


def _lawson_rk4(grid, prop, h, u, om):
    half = 0.5 * h
    k1u, k1w = _nl(grid, u, om)
    hu, hw = prop(half, u, om)
    a_u, a_w = prop(half, u + half * k1u, om + half * k1w)
    k2u, k2w = _nl(grid, a_u, a_w)
    k3u, k3w = _nl(grid, hu + half * k2u, hw + half * k2w)
    p3u, p3w = prop(half, k3u, k3w)
    fu, fw = prop(h, u, om)
    k4u, k4w = _nl(grid, fu + h * p3u, fw + h * p3w)
    ek1u, ek1w = prop(h, k1u, k1w)
    mu_, mw_ = prop(half, k2u + k3u, k2w + k3w)
    new_u = fu + h / 6 * (ek1u + 2 * mu_ + k4u)
    new_w = fw + h / 6 * (ek1w + 2 * mw_ + k4w)
    return new_u, new_w


_SCHEMES = {"if_rk2": _lawson_rk2, "if_rk4": _lawson_rk4}


def step(state: State, config: SolverConfig, dt: float | None = None, _prop: _Propagators | None = None) -> State:
    """One integrating-factor Runge-Kutta step of length ``dt`` (default ``config.dt``)."""
    grid = state.grid
    h = config.dt if dt is None else dt
    prop = _prop or _Propagators(grid, config.visc)
    if not config.nonlinear:
        u, om = prop(h, state.u, state.omega)
        return State(grid, u, om, state.time + h)
    limit = cfl_dt(state, config.cfl)
    if h > limit * (1 + 1e-12):
        raise CFLError(h, limit)
    u, om = _SCHEMES[config.integrator](grid, prop, h, state.u, state.omega)
    u, om = _clean(grid, u, om)
    return State(grid, u, om, state.time + h)


# ---------------------------------------------------------------------------
# norms recorded along a run

def _lambda(grid, f, l):
    if l == 0:
        return f
    if l < 0:
        f = f.copy()
        f[:, 0, 0, 0] = 0.0
    return apply_symbol(grid, f, "lambda_pow", l)


def _fmt(x: float) -> str:
    return f"{x:g}"


def _split_besov(part: DyadicPartition, f: np.ndarray, s: float, p: float, q: float, j0: int) -> tuple[float, float]:
    """Low (j <= j0) and high (j > j0) parts of the Besov norm of a mean-free field, one pass over blocks."""
    norms = block_norms(part, f, p)
    low = [2.0 ** (j * s) * v for j, v in norms.items() if j <= j0]
    high = [2.0 ** (j * s) * v for j, v in norms.items() if j > j0]
    return lq_sum(low, q), lq_sum(high, q)


def record_norms(part: DyadicPartition, state: State, config: SolverConfig) -> dict[str, float]:
    """Norms tracked by :func:`simulate` for one state."""
    grid = state.grid
    rec = {"E": energy(state)}
    u_mf = state.u.copy()
    u_mf[:, 0, 0, 0] = 0.0
    om_mf = state.omega.copy()
    om_mf[:, 0, 0, 0] = 0.0
    for l, r in config.norm_requests:
        tag = f"{_fmt(l)}:{_fmt(r)}"
        for name, full, mf in (("u", state.u, u_mf), ("omega", state.omega, om_mf)):
            lf = full if l == 0 else _lambda(grid, mf, l)
            rec[f"{name}:{tag}"] = lp_norm(lf, r, real=True)
            low, high = _split_besov(part, mf if l == 0 else lf, 0.0, r, 1.0, config.j0)
            rec[f"{name}_low:{tag}"] = low
            rec[f"{name}_high:{tag}"] = high
    s = 3.0 / config.besov_p - 1.0
    p, q, j0 = config.besov_p, config.besov_q, config.j0
    u_low, u_high = _split_besov(part, u_mf, s, p, q, j0)
    _, om_high = _split_besov(part, om_mf, s, p, q, j0)
    lom_low, _ = _split_besov(part, apply_symbol(grid, om_mf, "lambda_pow", 1.0), s, p, q, j0)
    rec["X_high"] = u_high + om_high
    rec["X_low"] = u_low + lom_low
    return rec


@dataclass
class SimulationResult:
    snapshots: list[State]
    series: NormSeries
    growth_factor: float
    steps: int


def simulate(initial: State, config: SolverConfig) -> SimulationResult:
    """Integrate from ``initial`` to ``config.t_end``.

    Norms are recorded at ``config.norm_times`` (default: the snapshot
    times) and full states are kept at ``config.snapshot_times``.  With
    ``config.nonlinear = False`` the run jumps between output times with the
    exact linear propagator.
    """
    grid = initial.grid
    check_divergence_free(grid, initial.u)
    part = DyadicPartition(grid)
    prop = _Propagators(grid, config.visc)
    state = initial.copy()
    if config.nonlinear:
        u, om = _clean(grid, state.u, state.omega)
        state = State(grid, u, om, state.time)
    u0max = max_velocity(state)
    norm_times = set(config.snapshot_times if config.norm_times is None else config.norm_times)
    snap_times = set(config.snapshot_times)
    snapshots, series = [], NormSeries()
    growth = 1.0
    steps = 0
    t0 = state.time

    def emit(st: State, t: float):
        if t in norm_times:
            series.append(t, record_norms(part, st, config))
        if t in snap_times:
            snapshots.append(st.copy())

    targets = [t for t in config.output_times if t >= t0]
    if t0 in targets:
        emit(state, t0)
        targets.remove(t0)
    flow = None if config.nonlinear else LinearFlow(grid, initial.u, initial.omega, config.visc)
    targets = targets + ([config.t_end] if not targets or targets[-1] < config.t_end else [])
    for target in targets:
        if not config.nonlinear:
            u, om = flow.at(target - t0)
            state = State(grid, u, om, target)
            steps += 1
        else:
            while state.time < target - 1e-12 * max(1.0, target):
                h = min(config.dt, target - state.time)
                state = step(state, config, h, prop)
                steps += 1
                if u0max > 0:
                    growth = max(growth, max_velocity(state) / u0max)
                    if growth > config.blowup_factor:
                        raise BlowUpError(
                            f"max|u| grew by {growth:.3g} (> {config.blowup_factor}) at t = {state.time:.4g}"
                        )
            state.time = target
        emit(state, target)
    return SimulationResult(snapshots, series, growth, steps)


# ---------------------------------------------------------------------------
# initial data

def _normalize_rms(u: np.ndarray, amplitude: float) -> np.ndarray:
    rms = lp_norm(u, 2)
    return u if rms == 0 else u * (amplitude / rms)


def taylor_green(grid: Grid3, amplitude: float = 1.0) -> State:
    x, y, z = grid.x
    k = grid.dk
    u = np.stack(np.broadcast_arrays(
        np.sin(k * x) * np.cos(k * y) * np.cos(k * z),
        -np.cos(k * x) * np.sin(k * y) * np.cos(k * z),
        np.zeros_like(x * y * z),
    ))
    return State(grid, amplitude * forward(u), grid.zeros(True))


def phi_seed(grid: Grid3, width: float | None = None) -> np.ndarray:
    """Coefficients of the periodized Gaussian ``exp(-|x - c|^2 / (2 w^2))``.

    ``c`` is the box center and ``w = L/16`` by default; the coefficients are
    ``(2 pi w^2)^{3/2} / L^3 * exp(-w^2 |xi|^2 / 2 - i xi . c)``.
    """
    w = grid.L / 16 if width is None else width
    c = grid.L / 2
    x1, x2, x3 = grid.xi
    phase = np.exp(-1j * c * (x1 + x2 + x3))
    return (2 * np.pi * w * w) ** 1.5 / grid.L**3 * np.exp(-0.5 * w * w * grid.xi_sq) * phase


def kato_oscillating(grid: Grid3, eps: float, amplitude: float = 1.0, width: float | None = None) -> State:
    """``u0 = amplitude * sin(x3/eps) (-d2 Phi, d1 Phi, 0)``, omega0 = 0."""
    periods = grid.L / (2 * np.pi * eps)
    if abs(periods - round(periods)) > 1e-9:
        raise ValueError("sin(x3/eps) is not periodic on the box: L / (2 pi eps) must be an integer")
    phi = phi_seed(grid, width)
    d1 = to_physical_real(1j * grid.xi[0] * phi)
    d2 = to_physical_real(1j * grid.xi[1] * phi)
    osc = np.sin(grid.x[2] / eps)
    u = np.stack([-osc * d2, osc * d1, np.zeros(grid.shape)])
    u_hat = leray_project(grid, forward(u) * grid.dealias_mask)
    u_hat[:, 0, 0, 0] = 0.0
    return State(grid, amplitude * enforce_hermitian(u_hat), grid.zeros(True))


def random_slope(
    grid: Grid3,
    sigma: float,
    amplitude: float,
    band: tuple[float, float] | None = None,
    seed: int = 0,
    omega_ratio: float = 1.0,
) -> State:
    """Random divergence-free data with ``|u0_hat(xi)| = C |xi|^(sigma - 3/2)``.

    Phases come from white noise; moduli are set exactly on the band
    ``band[0] <= |xi| <= band[1]`` (default: the whole 2/3 band).  The
    microrotation has ``|omega0_hat| = omega_ratio * C |xi|^(sigma - 5/2)``,
    i.e. ``Lambda omega0`` carries the same envelope as ``u0``.  ``amplitude``
    is the L^2 norm of ``u0``.
    """
    rng = np.random.default_rng(seed)
    lo, hi = band if band is not None else (0.0, np.inf)
    mask = grid.dealias_mask & (grid.xi_norm >= lo) & (grid.xi_norm <= hi)
    mask[0, 0, 0] = False
    k = grid.xi_norm.copy()
    k[0, 0, 0] = 1.0

    def shaped(noise: np.ndarray, project: bool, power: float) -> np.ndarray:
        c = forward(noise)
        if project:
            c = leray_project(grid, c)
        mod = np.sqrt(np.sum(np.abs(c) ** 2, axis=0))
        mod[mod == 0] = 1.0
        return c / mod * (k**power) * mask

    u = shaped(rng.standard_normal((3,) + grid.shape), True, sigma - 1.5)
    om = shaped(rng.standard_normal((3,) + grid.shape), False, sigma - 2.5)
    scale = amplitude / lp_norm(u, 2) if amplitude > 0 else 0.0
    return State(grid, u * scale, om * scale * omega_ratio)


@dataclass
class InitialData:
    kind: str
    params: dict = field(default_factory=dict)

    def build(self, grid: Grid3) -> State:
        builders = {"kato_oscillating": kato_oscillating, "taylor_green": taylor_green, "random_slope": random_slope}
        if self.kind not in builders:
            raise ValueError(f"unknown initial data kind {self.kind!r}")
        return builders[self.kind](grid, **self.params)


def smallness_report(state: State, p: float = 2.0, q: float = 1.0, j0: int = 0, growth_factor: float | None = None) -> dict:
    """High/low Besov pieces of the smallness functional for global existence.

    ``X = ||(u0, w0)||^h_{B^{3/p-1}_{p,q}} + ||(u0, Lambda w0)||^l_{B^{3/p-1}_{p,q}}``
    with high = blocks ``j > j0`` and low = blocks ``j <= j0``.
    """
    grid = state.grid
    part = DyadicPartition(grid)
    spec = BesovSpec(3.0 / p - 1.0, p, q, j0)
    u = state.u.copy()
    om = state.omega.copy()
    if np.max(np.abs(u[:, 0, 0, 0])) > 1e-12 * max(np.max(np.abs(u)), 1e-300):
        raise ValueError("velocity must have zero mean")
    om[:, 0, 0, 0] = 0.0
    parts = {
        "u_high": besov_norm(part, u, spec, "high"),
        "omega_high": besov_norm(part, om, spec, "high"),
        "u_low": besov_norm(part, u, spec, "low"),
        "Lambda_omega_low": besov_norm(part, apply_symbol(grid, om, "lambda_pow", 1.0), spec, "low"),
    }
    rep = {"X0p": sum(parts.values()), **parts, "p": p, "q": q, "j0": j0}
    if growth_factor is not None:
        rep["growth_factor"] = growth_factor
    return rep
