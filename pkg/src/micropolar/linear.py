"""Linearized micropolar system: symbol, spectrum and exact propagator.

For a divergence-free velocity the pair ``(u, Omega)`` with
``Omega = curl P omega`` obeys, mode by mode,

    d/dt (u, Omega) = -A(|xi|) (u, Omega),
    A = [[chi_bar |xi|^2, -2 chi], [-2 chi |xi|^2, mu |xi|^2 + 4 chi]],

while the curl-free part ``Q omega`` is damped by
``exp(-t((mu + kappa)|xi|^2 + 4 chi))``.  The eigenvalues of ``A`` are the
decay exponents ``lambda_plus >= lambda_minus >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy.linalg import expm

from .littlewood_paley import DyadicPartition
from .spectral import (
    Grid3,
    State,
    Viscosities,
    apply_symbol,
    curl,
    divergence_defect,
    helmholtz_split,
    lp_norm,
    random_real_field,
)


@dataclass(frozen=True)
class SymbolMatrix:
    xi_norm: float
    visc: Viscosities

    @property
    def entries(self) -> np.ndarray:
        v, s = self.visc, self.xi_norm**2
        return np.array([
            [v.chi_bar * s, -2 * v.chi],
            [-2 * v.chi * s, v.mu * s + 4 * v.chi],
        ])

    @property
    def trace(self) -> float:
        v, s = self.visc, self.xi_norm**2
        return (v.chi_bar + v.mu) * s + 4 * v.chi

    @property
    def determinant(self) -> float:
        v, s = self.visc, self.xi_norm**2
        return v.chi_bar * v.mu * s**2 + 4 * v.nu * v.chi * s


@dataclass(frozen=True)
class EigenPair:
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    complex_pair: bool = False


def _trace_det(s, visc: Viscosities):
    tr = (visc.chi_bar + visc.mu) * s + 4 * visc.chi
    det = visc.chi_bar * visc.mu * s**2 + 4 * visc.nu * visc.chi * s
    return tr, det


def eigenvalues(xi_norm, visc: Viscosities) -> EigenPair:
    """Closed-form eigenvalues of the symbol matrix.

    ``lambda_minus`` is evaluated as ``det / lambda_plus`` to avoid the
    cancellation of the textbook formula at small ``|xi|``.  If the
    discriminant were negative the complex pair is returned with the flag
    set.
    """
    xi_norm = np.asarray(xi_norm, dtype=float)
    if np.any(xi_norm < 0):
        raise ValueError("|xi| must be nonnegative")
    s = xi_norm**2
    tr, det = _trace_det(s, visc)
    disc = tr**2 - 4 * det
    if np.any(disc < 0):
        root = np.sqrt(disc.astype(complex))
        return EigenPair((tr + root) / 2, (tr - root) / 2, complex_pair=True)
    lam_p = (tr + np.sqrt(disc)) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_m = np.where(lam_p > 0, det / np.where(lam_p > 0, lam_p, 1.0), 0.0)
    return EigenPair(lam_p, lam_m)


def asymptotics_report(visc: Viscosities, xi_grid) -> dict:
    """Low- and high-frequency ratios of the eigenvalues to their asymptotes."""
    xi_grid = np.asarray(xi_grid, dtype=float)
    if np.log10(xi_grid.max() / xi_grid.min()) < 4:
        raise ValueError("xi grid must span at least four decades")
    ev = eigenvalues(xi_grid, visc)
    lp, lm = np.real(ev.lambda_plus), np.real(ev.lambda_minus)
    s = xi_grid**2
    rep = {
        "xi": xi_grid,
        "lambda_plus": lp,
        "lambda_minus": lm,
        "ratio_plus_low": lp / (4 * visc.chi),
        "ratio_minus_low": lm / (visc.nu * s),
        "ratio_product_high": lp * lm / (visc.chi_bar * visc.mu * s**2),
        "ratio_sum_high": (lp + lm) / ((visc.chi_bar + visc.mu) * s),
    }

    def at(x, key):
        return float(np.interp(np.log(x), np.log(xi_grid), rep[key]))

    checks = {}
    if xi_grid.min() <= 1e-2:
        checks["low_plus"] = abs(at(1e-2, "ratio_plus_low") - 1) <= 0.02
        checks["low_minus"] = abs(at(1e-2, "ratio_minus_low") - 1) <= 0.02
    if xi_grid.max() >= 1e2:
        checks["high_product"] = abs(at(1e2, "ratio_product_high") - 1) <= 0.02
        checks["high_sum"] = abs(at(1e2, "ratio_sum_high") - 1) <= 0.02
    rep["checks"] = checks
    rep["passed"] = all(checks.values())
    return rep


def propagator_entries(xi_sq, t: float, visc: Viscosities):
    """Entries of ``exp(-t A)`` evaluated on an array of ``|xi|^2``.

    Uses ``exp(-t A) = exp(-t lam_m) (I + (lam_m I - A) (1 - exp(-g t)) / g)``
    with ``g = lam_p - lam_m``, which stays finite for stiff modes and
    degenerates gracefully to ``g = 0``.
    """
    s = np.asarray(xi_sq, dtype=float)
    ev = eigenvalues(np.sqrt(s), visc)
    if ev.complex_pair:
        raise ValueError("complex eigenvalues: use the dense propagator")
    lam_p, lam_m = ev.lambda_plus, ev.lambda_minus
    g = lam_p - lam_m
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(g > 0, -np.expm1(-g * t) / np.where(g > 0, g, 1.0), t)
    decay = np.exp(-lam_m * t)
    a11 = visc.chi_bar * s
    a12 = -2 * visc.chi
    a21 = -2 * visc.chi * s
    a22 = visc.mu * s + 4 * visc.chi
    e11 = decay * (1 + (lam_m - a11) * phi)
    e12 = decay * (-a12) * phi
    e21 = decay * (-a21) * phi
    e22 = decay * (1 + (lam_m - a22) * phi)
    return e11, e12, e21, e22


def check_divergence_free(grid: Grid3, u: np.ndarray, tol: float = 1e-10):
    d = divergence_defect(grid, u)
    if d > tol:
        raise ValueError(f"velocity is not divergence free (defect {d:.3e})")


def grid_entries(grid: Grid3, t: float, visc: Viscosities):
    """Propagator entries and the ``Q omega`` damping factor on the whole grid.

    All five are radial, so they are evaluated once per integer shell
    ``k1^2 + k2^2 + k3^2`` and gathered.
    """
    idx = grid.shell_index
    s = grid.dk**2 * np.arange(int(idx.max()) + 1, dtype=float)
    entries = propagator_entries(s, t, visc)
    q = np.exp(-t * ((visc.mu + visc.kappa) * s + 4 * visc.chi))
    return tuple(e[idx] for e in entries + (q,))


def apply_entries(grid: Grid3, entries, u: np.ndarray, big_om: np.ndarray, q_om: np.ndarray):
    """Evolve ``(u, Omega = curl P omega, Q omega)`` with precomputed entries."""
    e11, e12, e21, e22, q = entries
    u_new = e11 * u + e12 * big_om
    big_om_new = e21 * u + e22 * big_om
    k2 = grid.xi_sq.copy()
    k2[0, 0, 0] = 1.0
    # P omega = curl Omega / |xi|^2 since P omega is divergence free
    p_new = curl(grid, big_om_new) / k2
    p_new[:, 0, 0, 0] = 0.0
    return u_new, p_new + q * q_om


def propagate_fields(grid: Grid3, u: np.ndarray, omega: np.ndarray, t: float, visc: Viscosities):
    """Exact linear flow of coefficient arrays; ``t`` may be negative."""
    p_om, q_om = helmholtz_split(grid, omega)
    return apply_entries(grid, grid_entries(grid, t, visc), u, curl(grid, p_om), q_om)


def mode_propagate(xi, u_hat, omega_hat, t: float, visc: Viscosities):
    """Exact linear flow of a single mode with arbitrary wavevector ``xi != 0``."""
    xi = np.asarray(xi, dtype=float)
    s = float(xi @ xi)
    if s == 0:
        raise ValueError("mode_propagate needs a nonzero wavevector")
    u_hat = np.asarray(u_hat, dtype=complex)
    omega_hat = np.asarray(omega_hat, dtype=complex)
    p_om = omega_hat - xi * (xi @ omega_hat) / s
    q_om = omega_hat - p_om
    big_om = 1j * np.cross(xi, p_om)
    e11, e12, e21, e22 = (float(e) for e in propagator_entries(s, t, visc))
    u_new = e11 * u_hat + e12 * big_om
    big_new = e21 * u_hat + e22 * big_om
    q = np.exp(-t * ((visc.mu + visc.kappa) * s + 4 * visc.chi))
    return u_new, 1j * np.cross(xi, big_new) / s + q * q_om


class LinearFlow:
    """Exact linear flow from a fixed initial state, decomposed once."""

    def __init__(self, grid: Grid3, u: np.ndarray, omega: np.ndarray, visc: Viscosities):
        self.grid = grid
        self.visc = visc
        p_om, self.q_om = helmholtz_split(grid, omega)
        self.big_om = curl(grid, p_om)
        self.u = u

    def at(self, t: float):
        return apply_entries(self.grid, grid_entries(self.grid, t, self.visc), self.u, self.big_om, self.q_om)


def linear_propagate(state: State, t: float, visc: Viscosities, check: bool = True) -> State:
    """Advance the linear part of the system exactly by time ``t >= 0``."""
    if t < 0:
        raise ValueError("propagation time must be nonnegative")
    if check:
        check_divergence_free(state.grid, state.u)
    if t == 0:
        return state.copy()
    u, om = propagate_fields(state.grid, state.u, state.omega, t, visc)
    return State(state.grid, u, om, state.time + t)


def mode_matrix(xi, visc: Viscosities) -> np.ndarray:
    """6x6 generator of the linear part for one wavevector ``xi``.

    Assembled straight from the momentum and angular momentum equations,
    with the pressure removed by projecting the velocity equation.
    """
    xi = np.asarray(xi, dtype=float)
    s = xi @ xi
    cross = np.array([[0, -xi[2], xi[1]], [xi[2], 0, -xi[0]], [-xi[1], xi[0], 0]])
    eye = np.eye(3)
    proj = eye - np.outer(xi, xi) / s if s > 0 else eye
    m = np.zeros((6, 6), dtype=complex)
    m[:3, :3] = -visc.chi_bar * s * proj
    m[:3, 3:] = 2 * visc.chi * proj @ (1j * cross)
    m[3:, :3] = 2 * visc.chi * 1j * cross
    m[3:, 3:] = -(visc.mu * s + 4 * visc.chi) * eye - visc.kappa * np.outer(xi, xi)
    return m


def _mode_matrix_mp(xi, visc: Viscosities):
    """The 6x6 generator and the Leray projector in mpmath arithmetic."""
    x = [mp.mpf(float(c)) for c in xi]
    s = sum(c * c for c in x)
    eye = mp.eye(3)
    proj = eye - mp.matrix([[a * b / s for b in x] for a in x]) if s > 0 else eye
    cross = mp.matrix([[0, -x[2], x[1]], [x[2], 0, -x[0]], [-x[1], x[0], 0]])
    nu, chi, mu, ka = (mp.mpf(float(c)) for c in visc.as_tuple())
    m = mp.zeros(6, 6)
    blocks = (
        -(nu + chi) * s * proj,
        2 * chi * mp.mpc(0, 1) * (proj * cross),
        2 * chi * mp.mpc(0, 1) * cross,
        -(mu * s + 4 * chi) * eye - ka * mp.matrix([[a * b for b in x] for a in x]),
    )
    for (r0, c0), blk in zip(((0, 0), (0, 3), (3, 0), (3, 3)), blocks):
        for i in range(3):
            for j in range(3):
                m[r0 + i, c0 + j] = blk[i, j]
    return m, proj


def dense_mode_propagate(xi, u_hat, omega_hat, t, visc: Viscosities, dps: int | None = None):
    """Propagate one mode with a dense matrix exponential of the 6x6 generator.

    The velocity is Leray-projected before and after, since the pressure
    removes its longitudinal part.  ``t`` may be a sequence of times.  With
    ``dps`` the exponential and the product are evaluated in mpmath with
    ``dps`` digits beyond the ``t lambda_slowest / ln 10`` that the damping
    can cancel; otherwise scipy's double precision ``expm`` is used, whose
    error is relative to the largest intermediate and thus loses accuracy on
    strongly damped modes.  Times that are integer multiples of the smallest
    one reuse its exponential by powering.
    """
    xi = np.asarray(xi, dtype=float)
    s = xi @ xi
    proj = np.eye(3) - np.outer(xi, xi) / s if s > 0 else np.eye(3)
    v0 = np.concatenate([proj @ np.asarray(u_hat), np.asarray(omega_hat)])
    times = np.atleast_1d(np.asarray(t, dtype=float))
    gen = mode_matrix(xi, visc)
    out = []
    if dps is None:
        for tt in times:
            v = expm(tt * gen) @ v0
            out.append((proj @ v[:3], v[3:]))
    else:
        rates = np.abs(np.linalg.eigvals(gen).real)
        nonzero = rates[rates > 1e-12 * max(rates.max(), 1e-300)]
        slowest = nonzero.min() if nonzero.size else 0.0
        spread = slowest * times.max() / np.log(10)
        with mp.workdps(dps + int(np.ceil(spread))):
            gen_mp, proj_mp = _mode_matrix_mp(xi, visc)
            vec = mp.matrix([mp.mpc(z.real, z.imag) for z in np.concatenate([u_hat, omega_hat])])
            vec[:3, 0] = proj_mp * vec[:3, 0]
            base = float(times.min())
            e_base = mp.expm(base * gen_mp) if base > 0 else None
            for tt in times:
                k = tt / base if base > 0 else 0.0
                if base > 0 and abs(k - round(k)) < 1e-12:
                    e = e_base ** int(round(k))
                else:
                    e = mp.expm(tt * gen_mp)
                v = e * vec
                v[:3, 0] = proj_mp * v[:3, 0]
                v = np.array([complex(z) for z in v])
                out.append((v[:3], v[3:]))
    return out[0] if np.ndim(t) == 0 else out


def effective_velocity(state: State, visc: Viscosities) -> np.ndarray:
    """``R = curl P omega + Laplacian(u) / 2`` (normalized viscosities only)."""
    if not visc.is_normalized:
        raise ValueError("effective velocity is defined for nu = chi = 1/2, mu = kappa = 1 only")
    grid = state.grid
    p_om, _ = helmholtz_split(grid, state.omega)
    return curl(grid, p_om) + 0.5 * apply_symbol(grid, state.u, "laplacian")


def effective_velocity_residual(state: State, visc: Viscosities, dt: float = 1e-4) -> float:
    """Relative residual of the R-equation along the exact linear flow.

    ``d/dt R + 2 R - 3/2 Laplacian R + 1/4 Laplacian^2 u`` with the time
    derivative from a centered difference, normalized by the sum of the L^2
    norms of the individual terms.
    """
    grid = state.grid
    check_divergence_free(grid, state.u)
    r_at = {}
    for sign in (1, -1):
        u, om = propagate_fields(grid, state.u, state.omega, sign * dt, visc)
        r_at[sign] = effective_velocity(State(grid, u, om, state.time), visc)
    r0 = effective_velocity(state, visc)
    dr = (r_at[1] - r_at[-1]) / (2 * dt)
    lap_r = apply_symbol(grid, r0, "laplacian")
    bilap_u = apply_symbol(grid, apply_symbol(grid, state.u, "laplacian"), "laplacian")
    terms = [dr, 2 * r0, -1.5 * lap_r, 0.25 * bilap_u]
    scale = sum(lp_norm(x, 2) for x in terms)
    return lp_norm(sum(terms), 2) / scale if scale > 0 else 0.0


DAMPED_KERNEL_C = (3 / 4) ** 2


def damped_kernel_check(
    part: DyadicPartition,
    j: int,
    t_grid,
    p: float,
    trials: int = 20,
    rng: np.random.Generator | None = None,
    c: float = DAMPED_KERNEL_C,
) -> dict:
    """Measure ``||Delta_j e^{(Lap - 2)t} f||_p / (e^{-(c 4^j + 2)t} ||Delta_j f||_p)``.

    The common factor ``e^{-2t}`` cancels, so the ratio is evaluated as the
    norm of the multiplier ``e^{-(|xi|^2 - c 4^j) t}`` acting on the block;
    this keeps large ``4^j t`` free of underflow.
    """
    rng = rng or np.random.default_rng(0)
    grid = part.grid
    w = part.weight(j)
    shift = c * 4.0**j
    # restrict the exponent to the block so modes outside it cannot overflow
    rate = np.where(w > 0, grid.xi_sq - shift, 0.0)
    worst = 0.0
    ratios = []
    for _ in range(trials):
        block = w * random_real_field(grid, rng)
        base = lp_norm(block, p, real=True)
        row = []
        for t in t_grid:
            evolved = np.exp(-rate * t) * block
            row.append(lp_norm(evolved, p, real=True) / base)
        ratios.append(row)
        worst = max(worst, max(row))
    return {"j": j, "p": p, "t_grid": list(map(float, t_grid)), "ratios": ratios, "worst": worst}
