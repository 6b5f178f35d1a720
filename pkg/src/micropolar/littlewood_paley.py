"""Dyadic decomposition, homogeneous Besov and Chemin-Lerner norms.

The radial profiles are built from the smooth step

    h(x) = exp(-1/x) for x > 0, 0 otherwise
    step(x) = h(x) / (h(x) + h(1 - x))
    chi(r) = 1 - step((r - 3/4) / (4/3 - 3/4))
    phi(r) = chi(r/2) - chi(r)

so ``chi`` is 1 on ``r <= 3/4`` and 0 on ``r >= 4/3``, ``phi`` lives in the
annulus ``3/4 <= r <= 8/3`` and the dyadic sum telescopes to exactly one.
Blocks act on physical wavenumbers ``|xi|``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spectral import (
    Grid3,
    from_physical_real,
    gradient,
    hermitian_defect,
    inverse,
    lp_norm,
    lp_norm_physical,
    to_physical_real,
)

_R_IN, _R_OUT = 0.75, 4.0 / 3.0


def _h(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    a, b = _h(x), _h(1.0 - x)
    return a / (a + b)


def chi_profile(r):
    """Low-pass profile: 1 for r <= 3/4, 0 for r >= 4/3."""
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - _R_IN) / (_R_OUT - _R_IN))


def phi_profile(r):
    """Annulus profile supported in 3/4 <= r <= 8/3."""
    r = np.asarray(r, dtype=float)
    return chi_profile(r / 2) - chi_profile(r)


@dataclass(frozen=True)
class BesovSpec:
    s: float
    p: float = 2.0
    q: float = 2.0
    cutoff_j0: int | None = None

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("Besov exponents p, q must be >= 1")


class DyadicPartition:
    """Dyadic blocks on a grid.

    ``j_min`` is the level of the smallest nonzero lattice frequency and
    ``j_max`` the last level that meets the lattice, so the blocks
    ``j_min..j_max`` reconstruct every mean-free grid field exactly.
    """

    def __init__(self, grid: Grid3):
        self.grid = grid
        r_min = grid.dk
        r_max = math.sqrt(3.0) * (grid.n // 2) * grid.dk
        self.j_min = math.floor(math.log2(3 * r_min / 8)) + 1
        self.j_max = math.ceil(math.log2(4 * r_max / 3)) - 1
        self._cache: dict[int, np.ndarray] = {}

    @property
    def levels(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def _check(self, j: int):
        if not self.j_min <= j <= self.j_max:
            raise ValueError(f"block {j} outside valid range [{self.j_min}, {self.j_max}]")

    def weight(self, j: int) -> np.ndarray:
        """phi(2^-j |xi|) on the lattice."""
        self._check(j)
        w = self._cache.get(j)
        if w is None:
            w = phi_profile(self.grid.xi_norm * 2.0**-j)
            self._cache[j] = w
        return w

    @property
    def shell_index(self) -> np.ndarray:
        return self.grid.shell_index.ravel()

    def shell_weight(self, j: int) -> np.ndarray:
        """``phi(2^-j |xi|)`` on the integer shells ``0..max(shell_index)``."""
        self._check(j)
        key = ("shell", j)
        w = self._cache.get(key)
        if w is None:
            m = np.arange(int(self.shell_index.max()) + 1)
            w = phi_profile(self.grid.dk * np.sqrt(m) * 2.0**-j)
            self._cache[key] = w
        return w

    def shell_power(self, f: np.ndarray) -> np.ndarray:
        """``sum |f_hat|^2`` over each integer shell."""
        power = np.abs(f) ** 2
        if f.ndim == 4:
            power = power.sum(axis=0)
        return np.bincount(self.shell_index, weights=power.ravel(), minlength=int(self.shell_index.max()) + 1)

    def low_weight(self, j: int) -> np.ndarray:
        """Sum of block weights up to and including level ``j`` (mean mode excluded)."""
        if j < self.j_min:
            return np.zeros(self.grid.shape)
        if j >= self.j_max:
            w = np.ones(self.grid.shape)
        else:
            w = chi_profile(self.grid.xi_norm * 2.0 ** -(j + 1))
        w = np.array(w, copy=True)
        w[0, 0, 0] = 0.0
        return w

    def partition_sum(self) -> np.ndarray:
        return sum(self.weight(j) for j in self.levels)


def dyadic_block(part: DyadicPartition, f: np.ndarray, j: int) -> np.ndarray:
    return part.weight(j) * f


def _mean_free_check(f: np.ndarray):
    mean = np.abs(f[..., 0, 0, 0])
    scale = np.max(np.abs(f))
    if scale > 0 and np.max(mean) > 1e-12 * scale:
        raise ValueError("homogeneous norm needs a zero-mean field")


def _levels(part: DyadicPartition, which: str, j0: int | None):
    if which == "all":
        return list(part.levels)
    if j0 is None:
        raise ValueError("a frequency cut-off j0 is needed for low/high norms")
    if which == "low":
        return [j for j in part.levels if j <= j0]
    if which == "high":
        return [j for j in part.levels if j > j0]
    raise ValueError(f"unknown frequency part {which!r}")


def block_norms(part: DyadicPartition, f: np.ndarray, p: float, levels=None) -> dict[int, float]:
    """``{j: ||Delta_j f||_{L^p}}``; p = 2 uses Parseval."""
    levels = part.levels if levels is None else levels
    out = {}
    if p == 2:
        shells = part.shell_power(f)
        for j in levels:
            out[j] = float(np.sqrt(np.sum(part.shell_weight(j) ** 2 * shells)))
        return out
    real = _is_real(f)
    for j in levels:
        b = part.weight(j) * f
        phys = to_physical_real(b) if real else inverse(b, real=False)
        out[j] = lp_norm_physical(phys, p)
    return out


def _is_real(f: np.ndarray) -> bool:
    scale = np.max(np.abs(f))
    return scale == 0 or hermitian_defect(f) <= 1e-12 * scale


def lq_sum(values, q: float) -> float:
    """``l^q`` norm of a finite sequence of nonnegative numbers."""
    values = np.asarray(list(values), dtype=float)
    if values.size == 0:
        return 0.0
    if np.isinf(q):
        return float(values.max())
    scale = values.max()
    if scale == 0:
        return 0.0
    return float(scale * np.sum((values / scale) ** q) ** (1.0 / q))


def besov_norm(
    part: DyadicPartition,
    f: np.ndarray,
    spec: BesovSpec,
    which: str = "all",
) -> float:
    """Homogeneous Besov norm; ``which`` selects all, low (j <= j0) or high blocks."""
    _mean_free_check(f)
    levels = _levels(part, which, spec.cutoff_j0)
    norms = block_norms(part, f, spec.p, levels)
    return lq_sum((2.0 ** (j * spec.s) * norms[j] for j in levels), spec.q)


def block_table(part: DyadicPartition, f: np.ndarray, spec: BesovSpec) -> list[dict]:
    rows = []
    for j, v in block_norms(part, f, spec.p).items():
        rows.append({"j": j, "2^j": 2.0**j, "block_Lp": v, "weighted": 2.0 ** (j * spec.s) * v})
    return rows


def write_block_table(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["j", "2^j", "block_Lp", "weighted"])
        writer.writeheader()
        writer.writerows(rows)


def _time_lp(values: np.ndarray, times: np.ndarray, rho: float) -> float:
    if np.isinf(rho):
        return float(values.max())
    return float(np.trapezoid(values**rho, times) ** (1.0 / rho))


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise ValueError("need at least two snapshots")
    if np.any(np.diff(times) <= 0):
        raise ValueError("snapshot times must be strictly increasing")
    return times


def chemin_lerner_norm(
    part: DyadicPartition,
    snapshots,
    times,
    rho: float,
    spec: BesovSpec,
    which: str = "all",
) -> float:
    """Time norm taken inside the block sum (trapezoid rule in time)."""
    times = _check_times(times)
    levels = _levels(part, which, spec.cutoff_j0)
    for f in snapshots:
        _mean_free_check(f)
    per_time = np.array([[block_norms(part, f, spec.p, levels)[j] for j in levels] for f in snapshots])
    inner = [_time_lp(per_time[:, i], times, rho) for i in range(len(levels))]
    return lq_sum((2.0 ** (j * spec.s) * v for j, v in zip(levels, inner)), spec.q)


def time_lebesgue_besov_norm(part, snapshots, times, rho, spec, which="all") -> float:
    """Plain L^rho_T(B^s_{p,q}) norm: Besov first, time integral outside."""
    times = _check_times(times)
    vals = np.array([besov_norm(part, f, spec, which) for f in snapshots])
    return _time_lp(vals, times, rho)


def frequency_split(part: DyadicPartition, f: np.ndarray, j0: int) -> tuple[np.ndarray, np.ndarray]:
    """Split into blocks ``j <= j0`` (plus the mean) and the rest."""
    low = part.low_weight(j0) * f
    low[..., 0, 0, 0] = f[..., 0, 0, 0]
    return low, f - low


# ---------------------------------------------------------------------------
# products

def band_limited(grid: Grid3, f: np.ndarray) -> bool:
    outside = np.abs(f) * ~grid.dealias_mask
    return not np.any(outside > 1e-14 * max(np.max(np.abs(f)), 1e-300))


def dealiased_product(grid: Grid3, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two real fields truncated to the 2/3 band."""
    prod = to_physical_real(a) * to_physical_real(b)
    return from_physical_real(prod) * grid.dealias_mask


def bony_decompose(part: DyadicPartition, a: np.ndarray, b: np.ndarray):
    """Paraproducts and remainder of the product ``a * b``.

    ``T_a b`` pairs ``Delta_j b`` with the blocks of ``a`` of level
    ``<= j - 2``; the remainder collects levels with ``|j - j'| <= 1``.
    All three parts are truncated to the 2/3 band, so they sum to the
    dealiased product.
    """
    grid = part.grid
    for name, f in (("a", a), ("b", b)):
        if not band_limited(grid, f):
            raise ValueError(f"{name} is not inside the 2/3 band: insufficient padding for alias-free product")
    _mean_free_check(a)
    _mean_free_check(b)
    levels = list(part.levels)
    da = {j: to_physical_real(part.weight(j) * a) for j in levels}
    db = {j: to_physical_real(part.weight(j) * b) for j in levels}
    zero = np.zeros(grid.shape)
    t_ab, rem, t_ba = zero.copy(), zero.copy(), zero.copy()
    low_a, low_b = zero.copy(), zero.copy()  # running sums of blocks <= j - 2
    for idx, j in enumerate(levels):
        if idx >= 2:
            low_a += da[levels[idx - 2]]
            low_b += db[levels[idx - 2]]
        t_ab += low_a * db[j]
        t_ba += low_b * da[j]
        near = da[j].copy()
        if idx > 0:
            near += da[levels[idx - 1]]
        if idx + 1 < len(levels):
            near += da[levels[idx + 1]]
        rem += near * db[j]
    mask = grid.dealias_mask
    return tuple(from_physical_real(x) * mask for x in (t_ab, rem, t_ba))


# ---------------------------------------------------------------------------
# inequalities

def interpolation_check(
    part: DyadicPartition,
    f: np.ndarray,
    sigma1: float,
    sigma2: float,
    theta: float,
    p: float = 2.0,
    r1: float = 2.0,
    r2: float = 2.0,
) -> dict:
    """Compare both sides of the Besov interpolation inequality (constant 1)."""
    if sigma1 == sigma2:
        raise ValueError("sigma1 and sigma2 must differ")
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    inv_r = theta / r1 + (1 - theta) / r2
    r = np.inf if inv_r == 0 else 1.0 / inv_r
    s = theta * sigma1 + (1 - theta) * sigma2
    lhs = besov_norm(part, f, BesovSpec(s, p, r))
    n1 = besov_norm(part, f, BesovSpec(sigma1, p, r1))
    n2 = besov_norm(part, f, BesovSpec(sigma2, p, r2))
    rhs = n1**theta * n2 ** (1 - theta)
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else 0.0, "holds": lhs <= rhs * (1 + 1e-12), "r": r}


def bernstein_ratio(part: DyadicPartition, f: np.ndarray, j: int, p: float) -> float:
    """``||grad f||_p / (2^j ||f||_p)`` for a scalar field."""
    grad = gradient(part.grid, f)
    return lp_norm(grad, p) / (2.0**j * lp_norm(f, p))


def embedding_constant(part: DyadicPartition, f: np.ndarray, s: float, p1: float, p2: float, r: float, r_tilde: float) -> float:
    """Measured ratio ``||f||_{B^{s-3(1/p1-1/p2)}_{p2,r~}} / ||f||_{B^s_{p1,r}}``."""
    if not (p1 <= p2 and r <= r_tilde):
        raise ValueError("embedding needs p1 <= p2 and r <= r_tilde")
    shift = 3 * (1 / p1 - (0 if np.isinf(p2) else 1 / p2))
    top = besov_norm(part, f, BesovSpec(s - shift, p2, r_tilde))
    bottom = besov_norm(part, f, BesovSpec(s, p1, r))
    return top / bottom


# ---------------------------------------------------------------------------
# time series of norms

@dataclass
class NormSeries:
    times: list[float] = field(default_factory=list)
    values: dict[str, list[float]] = field(default_factory=dict)

    def append(self, t: float, record: dict[str, float]) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError("times must be strictly increasing")
        for label, v in record.items():
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"norm {label} = {v} is not a finite nonnegative value")
        if self.times and set(record) != set(self.values):
            raise ValueError("every record must carry the same labels")
        if not self.times:
            self.values = {k: [] for k in record}
        self.times.append(float(t))
        for k, v in record.items():
            self.values[k].append(float(v))

    def array(self, label: str) -> np.ndarray:
        return np.asarray(self.values[label])

    @property
    def labels(self) -> list[str]:
        return list(self.values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", *self.labels])
            for i, t in enumerate(self.times):
                writer.writerow([repr(t), *(repr(self.values[k][i]) for k in self.labels)])

    @classmethod
    def from_csv(cls, path) -> "NormSeries":
        series = cls()
        with open(Path(path), newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            for row in reader:
                series.append(float(row[0]), {k: float(v) for k, v in zip(header[1:], row[1:])})
        return series
