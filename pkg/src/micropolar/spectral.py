"""Periodic-box spectral substrate.

Fields live in Fourier space as complex ``numpy`` arrays on the full lattice
``k in {-n/2, ..., n/2-1}^3`` stored in FFT order.  A scalar field has shape
``(n, n, n)``; a vector field has shape ``(3, n, n, n)``.  The forward
transform divides by ``n**3`` so that the coefficient of a constant field is
that constant, and Parseval reads ``sum |c_k|^2 == mean(|f|^2)``.

Physical wavenumbers are ``xi = (2*pi/L) * k``.  All L^p norms use the
unit-mass measure on the box, so ``||1||_{L^r} = 1``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

_AXES = (-3, -2, -1)


@dataclass(frozen=True)
class Grid3:
    """Cubic periodic grid with ``n`` points per axis on ``[0, L)^3``."""

    n: int
    L: float = 2 * np.pi

    def __post_init__(self):
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"domain length must be positive, got {self.L}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def dk(self) -> float:
        """Spacing of the physical wavenumber lattice."""
        return 2 * np.pi / self.L

    @cached_property
    def k1d(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, 1.0 / self.n)

    @cached_property
    def xi(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable physical wavenumber components."""
        k = self.k1d * self.dk
        return (k[:, None, None], k[None, :, None], k[None, None, :])

    @cached_property
    def xi_sq(self) -> np.ndarray:
        x1, x2, x3 = self.xi
        return x1**2 + x2**2 + x3**2

    @cached_property
    def xi_norm(self) -> np.ndarray:
        return np.sqrt(self.xi_sq)

    @cached_property
    def xi_l1(self) -> np.ndarray:
        x1, x2, x3 = self.xi
        return np.abs(x1) + np.abs(x2) + np.abs(x3)

    @cached_property
    def shell_index(self) -> np.ndarray:
        """Integer ``k1^2 + k2^2 + k3^2``; radial multipliers are functions of it."""
        k = np.rint(self.k1d).astype(np.int64)
        return k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Cubic 2/3-rule mask; also removes the Nyquist plane."""
        kmax = (self.n - 1) // 3
        keep = np.abs(self.k1d) <= kmax
        return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]

    @property
    def kmax_dealiased(self) -> float:
        """Largest retained physical wavenumber per axis."""
        return ((self.n - 1) // 3) * self.dk

    @cached_property
    def x(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable collocation coordinates."""
        x = np.arange(self.n) * (self.L / self.n)
        return (x[:, None, None], x[None, :, None], x[None, None, :])

    def mode_index(self, k) -> tuple[int, int, int]:
        """Array index of integer lattice mode ``k`` (negative allowed)."""
        return tuple(int(ki) % self.n for ki in k)

    def zeros(self, vector: bool = False) -> np.ndarray:
        shape = ((3,) if vector else ()) + self.shape
        return np.zeros(shape, dtype=complex)


@dataclass(frozen=True)
class Viscosities:
    """Viscosities of the micropolar system.

    ``chi = 0`` is accepted so the Navier-Stokes reduction can be run; every
    other viscosity must be strictly positive.
    """

    nu: float = 0.5
    chi: float = 0.5
    mu: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("nu", "mu", "kappa"):
            if not getattr(self, name) > 0:
                raise ValueError(f"viscosity {name} must be positive")
        if not self.chi >= 0:
            raise ValueError("viscosity chi must be nonnegative")

    @classmethod
    def normalized(cls) -> "Viscosities":
        return cls(nu=0.5, chi=0.5, mu=1.0, kappa=1.0)

    @property
    def chi_bar(self) -> float:
        return self.chi + self.nu

    @property
    def is_normalized(self) -> bool:
        return (self.nu, self.chi, self.mu, self.kappa) == (0.5, 0.5, 1.0, 1.0)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.nu, self.chi, self.mu, self.kappa)


@dataclass
class State:
    """Velocity and microrotation coefficients at one time."""

    grid: Grid3
    u: np.ndarray
    omega: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        for name in ("u", "omega"):
            arr = getattr(self, name)
            if arr.shape != (3,) + self.grid.shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {(3,) + self.grid.shape}")
        if self.time < 0:
            raise ValueError("time must be nonnegative")

    def copy(self) -> "State":
        return State(self.grid, self.u.copy(), self.omega.copy(), self.time)

    @classmethod
    def zeros(cls, grid: Grid3, time: float = 0.0) -> "State":
        return cls(grid, grid.zeros(True), grid.zeros(True), time)


# ---------------------------------------------------------------------------
# transforms

def _check_finite(a: np.ndarray):
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite values in field")


def forward(f: np.ndarray) -> np.ndarray:
    """Physical samples -> Fourier coefficients (divides by n**3)."""
    f = np.asarray(f)
    _check_finite(f)
    return sfft.fftn(f, axes=_AXES, norm="forward", workers=-1)


def inverse(c: np.ndarray, real: bool = True) -> np.ndarray:
    """Fourier coefficients -> physical samples.

    With ``real=True`` the imaginary part, which is roundoff for Hermitian
    coefficients, is dropped.
    """
    _check_finite(c)
    f = sfft.ifftn(c, axes=_AXES, norm="forward", workers=-1)
    return f.real if real else f


def transform(field_: np.ndarray, direction: str) -> np.ndarray:
    if direction == "forward":
        return forward(field_)
    if direction == "inverse":
        return inverse(field_)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def to_physical_real(c: np.ndarray) -> np.ndarray:
    """Fast inverse for Hermitian coefficients through the half spectrum."""
    n = c.shape[-1]
    return sfft.irfftn(c[..., : n // 2 + 1], s=(n, n, n), axes=_AXES, norm="forward", workers=-1)


def from_physical_real(f: np.ndarray) -> np.ndarray:
    """Fast forward transform of real samples, expanded to the full lattice."""
    n = f.shape[-1]
    half = sfft.rfftn(f, axes=_AXES, norm="forward", workers=-1)
    full = np.empty(f.shape, dtype=complex)
    full[..., : n // 2 + 1] = half
    # c(-k) = conj(c(k)) fills the missing k3 < 0 half
    neg = np.conj(half[..., 1 : n // 2])
    neg = np.roll(np.flip(neg, axis=(-3, -2)), 1, axis=(-3, -2))
    full[..., n // 2 + 1 :] = np.flip(neg, axis=-1)
    return full


def reflect(c: np.ndarray) -> np.ndarray:
    """Return ``c(-k)`` on the FFT-ordered lattice."""
    return np.roll(np.flip(c, axis=_AXES), 1, axis=_AXES)


def hermitian_defect(c: np.ndarray) -> float:
    """max |c(-k) - conj(c(k))|."""
    return float(np.max(np.abs(reflect(c) - np.conj(c))))


def enforce_hermitian(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c + np.conj(reflect(c)))


def dealias(grid: Grid3, c: np.ndarray) -> np.ndarray:
    return c * grid.dealias_mask


# ---------------------------------------------------------------------------
# projections and multipliers

def divergence(grid: Grid3, v: np.ndarray) -> np.ndarray:
    x1, x2, x3 = grid.xi
    return 1j * (x1 * v[0] + x2 * v[1] + x3 * v[2])


def divergence_defect(grid: Grid3, v: np.ndarray) -> float:
    """max_k |xi . v(k)| / max_k |v(k)| (0 for the zero field)."""
    vmax = np.max(np.abs(v))
    if vmax == 0:
        return 0.0
    return float(np.max(np.abs(divergence(grid, v))) / vmax)


def _xi_dot(grid: Grid3, v: np.ndarray) -> np.ndarray:
    x1, x2, x3 = grid.xi
    return x1 * v[0] + x2 * v[1] + x3 * v[2]


def leray_project(grid: Grid3, v: np.ndarray) -> np.ndarray:
    """``v - xi (xi . v) / |xi|^2``; the xi = 0 mode passes through."""
    k2 = grid.xi_sq.copy()
    k2[0, 0, 0] = 1.0
    proj = _xi_dot(grid, v) / k2
    out = np.empty_like(v)
    for i, xi in enumerate(grid.xi):
        out[i] = v[i] - xi * proj
    return out


def helmholtz_split(grid: Grid3, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split ``w`` into a divergence-free and a curl-free part.

    The mean mode is assigned to the curl-free part.
    """
    p = leray_project(grid, w)
    p[:, 0, 0, 0] = 0.0
    return p, w - p


def curl(grid: Grid3, v: np.ndarray) -> np.ndarray:
    x1, x2, x3 = grid.xi
    return 1j * np.stack([
        x2 * v[2] - x3 * v[1],
        x3 * v[0] - x1 * v[2],
        x1 * v[1] - x2 * v[0],
    ])


def gradient(grid: Grid3, f: np.ndarray) -> np.ndarray:
    return np.stack([1j * xi * f for xi in grid.xi])


def apply_symbol(grid: Grid3, f: np.ndarray, kind: str, param: float | None = None) -> np.ndarray:
    """Apply a Fourier multiplier to a scalar or vector field.

    ``kind`` is one of ``laplacian``, ``curl``, ``grad_div``,
    ``lambda_pow`` (param ``s``), ``heat`` (param ``t``), ``gevrey_l1`` and
    ``gevrey_l2`` (param ``a``: multiply by ``exp(a|xi|_1)`` resp.
    ``exp(a|xi|)``).
    """
    vector = f.ndim == 4
    if kind == "laplacian":
        return -grid.xi_sq * f
    if kind in ("curl", "grad_div"):
        if not vector:
            raise ValueError(f"{kind} needs a vector field")
        if kind == "curl":
            return curl(grid, f)
        d = _xi_dot(grid, f)
        return -np.stack([xi * d for xi in grid.xi])
    if param is None:
        raise ValueError(f"symbol {kind} needs a parameter")
    if kind == "lambda_pow":
        s = float(param)
        if s == 0:
            return f.copy()
        k = grid.xi_norm.copy()
        if s < 0:
            zero = f[..., 0, 0, 0]
            if np.any(zero != 0):
                raise ValueError("homogeneous multiplier undefined at zero mode")
            k[0, 0, 0] = 1.0
        m = k**s
        if s > 0:
            m[0, 0, 0] = 0.0
        return m * f
    if kind == "heat":
        return np.exp(-float(param) * grid.xi_sq) * f
    if kind in ("gevrey_l1", "gevrey_l2"):
        a = float(param)
        if a == 0:
            return f.copy()
        weight = grid.xi_l1 if kind == "gevrey_l1" else grid.xi_norm
        return np.exp(a * weight) * f
    raise ValueError(f"unknown symbol {kind!r}")


# ---------------------------------------------------------------------------
# norms

def magnitude(f_phys: np.ndarray) -> np.ndarray:
    """Pointwise modulus; Euclidean length for vector samples."""
    if f_phys.ndim == 4:
        return np.sqrt(np.sum(np.abs(f_phys) ** 2, axis=0))
    return np.abs(f_phys)


def lp_norm_physical(f_phys: np.ndarray, r: float) -> float:
    if r < 1:
        raise ValueError(f"Lebesgue exponent must be >= 1, got {r}")
    a = magnitude(f_phys)
    if np.isinf(r):
        return float(np.max(a))
    if r == 2:
        return float(np.sqrt(np.mean(a * a)))
    if r == 1:
        return float(np.mean(a))
    scale = np.max(a)
    if scale == 0:
        return 0.0
    return float(scale * np.mean((a / scale) ** r) ** (1.0 / r))


def lp_norm(f: np.ndarray, r: float, real: bool | None = None) -> float:
    """L^r norm (unit-mass measure) of a field given by its coefficients.

    ``r = 2`` uses Parseval; other exponents go through physical samples.
    ``real=None`` decides from the Hermitian symmetry of ``f``.
    """
    if r < 1:
        raise ValueError(f"Lebesgue exponent must be >= 1, got {r}")
    if r == 2:
        return float(np.sqrt(np.sum(np.abs(f) ** 2)))
    if real is None:
        scale = np.max(np.abs(f))
        real = scale == 0 or hermitian_defect(f) <= 1e-12 * scale
    phys = to_physical_real(f) if real else inverse(f, real=False)
    return lp_norm_physical(phys, r)


def energy(state: State) -> float:
    """0.5 * (||u||^2 + ||omega||^2) in L^2 of the unit-mass measure."""
    return 0.5 * float(np.sum(np.abs(state.u) ** 2) + np.sum(np.abs(state.omega) ** 2))


def random_real_field(grid: Grid3, rng: np.random.Generator, vector: bool = False) -> np.ndarray:
    """Coefficients of white noise sampled in physical space."""
    shape = ((3,) if vector else ()) + grid.shape
    return forward(rng.standard_normal(shape))


# ---------------------------------------------------------------------------
# snapshots

SNAPSHOT_MAGIC = b"MPS1"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIdd4d")


class SnapshotError(ValueError):
    pass


def save_snapshot(state: State, path, visc: Viscosities | None = None) -> None:
    """Write ``state`` in the MPS1 binary layout.

    Coefficients are stored for the six components (u1, u2, u3, w1, w2, w3)
    in row-major order of ascending mode index ``k``, each as a
    little-endian ``(re, im)`` pair of float64.
    """
    visc = visc or Viscosities.normalized()
    g = state.grid
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.n, g.L, state.time, *visc.as_tuple())
    data = np.concatenate([state.u, state.omega])
    data = np.fft.fftshift(data, axes=_AXES).astype("<c16")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes(order="C"))


def load_snapshot(path, return_visc: bool = False):
    """Read an MPS1 snapshot; optionally also return its viscosities."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotError("truncated snapshot header")
    magic, version, n, L, time, *visc = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported version {version}")
    count = 6 * n**3
    body = raw[_HEADER.size:]
    if len(body) != 16 * count:
        raise SnapshotError(f"truncated snapshot: expected {16 * count} bytes of data, got {len(body)}")
    data = np.frombuffer(body, dtype="<c16").reshape((6, n, n, n))
    data = np.fft.ifftshift(data, axes=_AXES).astype(complex)
    state = State(Grid3(n, L), data[:3].copy(), data[3:].copy(), time)
    if return_visc:
        return state, Viscosities(*visc)
    return state
