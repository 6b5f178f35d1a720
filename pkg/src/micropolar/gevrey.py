"""Gevrey norms, analyticity-radius fits and numerical checks of Gevrey multiplier estimates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .littlewood_paley import BesovSpec, DyadicPartition, besov_norm, frequency_split, phi_profile
from .spectral import Grid3, apply_symbol, lp_norm, random_real_field

OVERFLOW_LIMIT = 600.0


class GevreyOverflowError(ValueError):
    pass


@dataclass(frozen=True)
class GevreyNorm:
    """``||e^{a Lambda_1} f||`` (flavor ``l1``) or ``||e^{a Lambda} f||`` (``euclid``).

    ``inner`` is either a Lebesgue exponent or a :class:`BesovSpec`.
    """

    a: float
    flavor: str = "euclid"
    inner: float | BesovSpec = 2.0

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("Gevrey radius must be nonnegative")
        if self.flavor not in ("l1", "euclid"):
            raise ValueError("flavor must be 'l1' or 'euclid'")


def _weight(grid: Grid3, flavor: str) -> np.ndarray:
    return grid.xi_l1 if flavor == "l1" else grid.xi_norm


def _support(f: np.ndarray) -> np.ndarray:
    power = np.abs(f) ** 2
    if f.ndim == 4:
        power = power.sum(axis=0)
    return power > 0


def gevrey_multiply(grid: Grid3, f: np.ndarray, a: float, flavor: str = "euclid") -> np.ndarray:
    """``e^{a|xi|_1} f`` or ``e^{a|xi|} f`` with the overflow guard ``a |xi| <= 600`` on the support of f."""
    supp = _support(f)
    if not supp.any():
        return f.copy()
    top = float(np.max(_weight(grid, flavor)[supp])) * a
    if top > OVERFLOW_LIMIT:
        raise GevreyOverflowError(f"Gevrey exponent {top:.1f} exceeds the guard {OVERFLOW_LIMIT:g}")
    # off the support the weight is irrelevant and may overflow
    return np.exp(a * np.where(supp, _weight(grid, flavor), 0.0)) * f


def gevrey_norm(grid: Grid3, f: np.ndarray, gn: GevreyNorm, part: DyadicPartition | None = None) -> float:
    g = gevrey_multiply(grid, f, gn.a, gn.flavor)
    if isinstance(gn.inner, BesovSpec):
        return besov_norm(part or DyadicPartition(grid), g, gn.inner)
    return lp_norm(g, float(gn.inner))


# ---------------------------------------------------------------------------
# analyticity radius

@dataclass(frozen=True)
class RadiusFit:
    radius_estimate: float
    fit_window: tuple[int, int]
    residual: float
    slope: float


def shell_maxima(grid: Grid3, f: np.ndarray, shells: tuple[int, int]):
    """Per integer shell ``m = round(|xi| / dk)``: largest ``|f_hat|`` and the ``|xi|`` where it sits."""
    mag = np.abs(f) if f.ndim == 3 else np.sqrt(np.sum(np.abs(f) ** 2, axis=0))
    shell = np.rint(grid.xi_norm / grid.dk).astype(int)
    radii, maxima = [], []
    for m in range(shells[0], shells[1] + 1):
        sel = shell == m
        if not sel.any():
            continue
        vals = mag[sel]
        i = int(np.argmax(vals))
        if vals[i] > 0:
            radii.append(grid.xi_norm[sel][i])
            maxima.append(vals[i])
    return np.asarray(radii), np.asarray(maxima)


def radius_fit(grid: Grid3, f: np.ndarray, shells: tuple[int, int]) -> RadiusFit:
    """Analyticity radius from the exponential envelope of the spectrum.

    Fits ``log max_shell |f_hat|`` against ``|xi|`` by least squares over the
    integer shells in ``shells``; the radius is minus the slope, clipped at 0.
    """
    radii, maxima = shell_maxima(grid, f, shells)
    if radii.size < 4:
        raise ValueError("radius fit needs a nonzero spectrum on at least 4 shells")
    logs = np.log(maxima)
    if np.ptp(logs) == 0:
        raise ValueError("degenerate fit: all shell maxima are equal")
    coef, res, *_ = np.polyfit(radii, logs, 1, full=True)
    slope, icpt = coef
    resid = float(np.sqrt(np.mean((logs - (slope * radii + icpt)) ** 2)))
    return RadiusFit(max(0.0, -float(slope)), (int(shells[0]), int(shells[1])), resid, float(slope))


# ---------------------------------------------------------------------------
# smoothing constant

def smoothing_constant(m: float) -> float:
    """``C_m = 1/(1 - 2^-m) + (8m)^m / (1 - e^{-1/8})``."""
    if m <= 0:
        raise ValueError("m must be positive")
    return 1.0 / (1.0 - 2.0**-m) + (8.0 * m) ** m / (1.0 - np.exp(-1.0 / 8.0))


def random_low_field(part: DyadicPartition, j0: int, rng: np.random.Generator) -> np.ndarray:
    low, _ = frequency_split(part, random_real_field(part.grid, rng), j0)
    low[0, 0, 0] = 0.0
    return low


def random_high_field(part: DyadicPartition, j0: int, rng: np.random.Generator) -> np.ndarray:
    _, high = frequency_split(part, random_real_field(part.grid, rng), j0)
    return high


def smoothing_constant_check(
    part: DyadicPartition,
    m: float,
    t: float,
    trials: int = 100,
    s: float = 0.0,
    p: float = 2.0,
    j0: int = 2,
    which: str = "low",
    rng: np.random.Generator | None = None,
) -> dict:
    """Test ``||Lambda^m f||_{B^s_{p,1}} <= C_m t^{-m/2} F ||e^{sqrt(t) Lambda_1} f||_{B^s_{p,inf}}``.

    ``which = "low"`` uses blocks ``j <= j0`` and ``F = 1``; ``which = "high"``
    uses blocks ``j > j0`` and ``F = exp(-a sqrt(t))`` with ``a = 2^j0 / 4``.
    """
    if m <= 0 or t <= 0:
        raise ValueError("m and t must be positive")
    rng = rng or np.random.default_rng(0)
    grid = part.grid
    cm = smoothing_constant(m)
    a = 2.0**j0 / 4.0 if which == "high" else 0.0
    factor = t ** (-m / 2) * np.exp(-a * np.sqrt(t))
    make = random_low_field if which == "low" else random_high_field
    lhs_spec = BesovSpec(s, p, 1.0, j0)
    rhs_spec = BesovSpec(s, p, np.inf, j0)
    ratios = []
    for _ in range(trials):
        f = make(part, j0, rng)
        lhs = besov_norm(part, apply_symbol(grid, f, "lambda_pow", m), lhs_spec, which)
        rhs = besov_norm(part, gevrey_multiply(grid, f, np.sqrt(t), "l1"), rhs_spec, which)
        ratios.append(lhs / (factor * rhs))
    worst = float(max(ratios))
    return {"m": m, "t": t, "which": which, "C_m": cm, "worst_ratio": worst, "holds": worst <= cm, "trials": trials}


# ---------------------------------------------------------------------------
# equivalence of the l1 and Euclidean Gevrey multipliers

EQUIV_C1 = 0.9 / np.sqrt(3.0)
EQUIV_C2 = 1.1


def _bisect(pred, lo: float, hi: float, iters: int = 50) -> float:
    """Boundary of a monotone predicate that is True at ``lo`` and False at ``hi``."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if pred(mid) else (lo, mid)
    return lo


def multiplier_equiv_check(
    part: DyadicPartition,
    alpha: float,
    block_j: int,
    trials: int = 20,
    p: float = 2.0,
    c1: float = EQUIV_C1,
    c2: float = EQUIV_C2,
    rng: np.random.Generator | None = None,
) -> dict:
    """Constants in ``C1 ||e^{c1 a Lambda_1} f|| <= ||e^{a Lambda} f|| <= C2 ||e^{c2 a Lambda_1} f||``.

    For fields supported in block ``block_j`` this reports the needed
    ``1/C1`` and ``C2`` (worst over trials) and, per field, the largest
    ``c1`` and smallest ``c2`` for which the inequalities hold with constant 1.
    """
    rng = rng or np.random.default_rng(0)
    grid = part.grid

    def norm(f, a, flavor):
        return lp_norm(gevrey_multiply(grid, f, a, flavor), p, real=True)

    inv_c1, c2_needed, best_c1, best_c2 = 0.0, 0.0, [], []
    for _ in range(trials):
        f = part.weight(block_j) * random_real_field(grid, rng)
        ne = norm(f, alpha, "euclid")
        inv_c1 = max(inv_c1, norm(f, c1 * alpha, "l1") / ne)
        c2_needed = max(c2_needed, ne / norm(f, c2 * alpha, "l1"))
        if alpha > 0:
            best_c1.append(_bisect(lambda c: norm(f, c * alpha, "l1") <= ne, 0.0, 1.0, 30))
            best_c2.append(_bisect(lambda c: norm(f, c * alpha, "l1") < ne, 0.0, 1.0, 30))
    return {
        "alpha": alpha,
        "j": block_j,
        "p": p,
        "inv_C1": inv_c1,
        "C2": c2_needed,
        "holds": inv_c1 <= 10 and c2_needed <= 10,
        "best_c1": min(best_c1) if best_c1 else None,
        "best_c2": max(best_c2) if best_c2 else None,
    }


# ---------------------------------------------------------------------------
# bilinear symbol

def bilinear_exponent(xi, eta, c: float, c1: float, c2: float) -> np.ndarray:
    n = np.linalg.norm
    return c * n(xi + eta, axis=-1) - c1 * n(xi, axis=-1) - c2 * n(eta, axis=-1)


def _localized_symbol(xi, eta, gamma, c, c1, c2, j_lo, j_hi):
    n = np.linalg.norm
    cut = phi_profile(n(xi, axis=-1) / 2.0**j_lo) * phi_profile(n(eta, axis=-1) / 2.0**j_hi)
    return np.exp(gamma * bilinear_exponent(xi, eta, c, c1, c2)) * cut


def _sample_pairs(rng, count, j_lo, j_hi):
    def annulus(j, size):
        d = rng.standard_normal((size, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return d * (2.0**j * rng.uniform(0.75, 8.0 / 3.0, size))[:, None], d

    xi, dxi = annulus(j_lo, count)
    eta, _ = annulus(j_hi, count)
    # include aligned and opposed pairs, where the triangle inequality is extremal
    k = count // 4
    r = np.linalg.norm(eta[:k], axis=1)[:, None]
    eta[:k] = dxi[:k] * r
    eta[k : 2 * k] = -dxi[k : 2 * k] * np.linalg.norm(eta[k : 2 * k], axis=1)[:, None]
    return xi, eta


def bilinear_symbol_check(
    gamma,
    c: float,
    c1: float,
    c2: float,
    j_lo: int,
    j_hi: int,
    sample_density: int = 2000,
    seed: int = 0,
    bound: float = 16.0,
) -> dict:
    """Sampled derivative bounds for ``m = e^{gamma(c|xi+eta| - c1|xi| - c2|eta|)}``.

    ``xi`` sits in the annulus of level ``j_lo`` and ``eta`` in level ``j_hi``;
    the symbol is localized by the dyadic bumps.  Derivatives are central
    finite differences; the report carries ``max |xi| |grad_xi m|`` and
    ``max |eta| |grad_eta m|`` for every gamma, plus the exponent condition
    ``c|xi+eta| - c1|xi| - c2|eta| <= -|eta|`` with its worst sample.
    """
    if j_lo > j_hi - 2:
        raise ValueError("need j_lo <= j_hi - 2")
    rng = np.random.default_rng(seed)
    xi, eta = _sample_pairs(rng, sample_density, j_lo, j_hi)
    excess = bilinear_exponent(xi, eta, c, c1, c2) + np.linalg.norm(eta, axis=1)
    worst = int(np.argmax(excess))
    exponent_ok = bool(excess[worst] <= 1e-12 * np.linalg.norm(eta[worst]))
    rows = []
    for g in np.atleast_1d(gamma):
        d_xi = np.zeros(len(xi))
        d_eta = np.zeros(len(xi))
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = 1.0
            hx = 1e-6 * 2.0**j_lo
            he = 1e-6 * 2.0**j_hi
            dm = _localized_symbol(xi + hx * e, eta, g, c, c1, c2, j_lo, j_hi) - _localized_symbol(
                xi - hx * e, eta, g, c, c1, c2, j_lo, j_hi
            )
            d_xi += (dm / (2 * hx)) ** 2
            dm = _localized_symbol(xi, eta + he * e, g, c, c1, c2, j_lo, j_hi) - _localized_symbol(
                xi, eta - he * e, g, c, c1, c2, j_lo, j_hi
            )
            d_eta += (dm / (2 * he)) ** 2
        bx = float(np.max(np.sqrt(d_xi) * np.linalg.norm(xi, axis=1)))
        be = float(np.max(np.sqrt(d_eta) * np.linalg.norm(eta, axis=1)))
        rows.append({"gamma": float(g), "xi_bound": bx, "eta_bound": be, "holds": bx <= bound and be <= bound})
    report = {
        "c": c,
        "c1": c1,
        "c2": c2,
        "j_lo": j_lo,
        "j_hi": j_hi,
        "exponent_ok": exponent_ok,
        "rows": rows,
        "passed": exponent_ok and all(r["holds"] for r in rows),
    }
    if not exponent_ok:
        report["violation"] = {"xi": xi[worst].tolist(), "eta": eta[worst].tolist(), "excess": float(excess[worst])}
    return report


def c2_threshold_scan(c: float, c1: float, candidates, j_lo: int, j_hi: int, gamma=(0.1, 1.0, 10.0), **kw) -> dict:
    """Smallest ``c2`` among ``candidates`` for which the bilinear check passes."""
    reports = {float(c2): bilinear_symbol_check(gamma, c, c1, c2, j_lo, j_hi, **kw) for c2 in sorted(candidates)}
    passing = [c2 for c2, r in reports.items() if r["passed"]]
    return {"smallest_c2": passing[0] if passing else None, "reports": reports}
