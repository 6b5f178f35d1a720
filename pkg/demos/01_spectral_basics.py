"""
Spectral basics
===============

A periodic grid, the Fourier transforms, the Leray projector and the
snapshot format.  Run with ``python3 demos/01_spectral_basics.py``.
"""
import tempfile
from pathlib import Path

import numpy as np

from micropolar import spectral
from micropolar.spectral import Grid3, State

# %% A grid with n = 32 points per axis on [0, 2 pi)^3
grid = Grid3(32)
print(f"n = {grid.n}, L = {grid.L:.4f}, dk = {grid.dk}, 2/3-band edge = {grid.kmax_dealiased}")

# %% Forward transform: coefficients are normalized so a constant maps to itself
x1, x2, x3 = grid.x
f = 1.0 + np.cos(2 * x1) * np.sin(3 * x2) + 0 * x3
c = spectral.forward(f)
print("mean coefficient:", c[0, 0, 0].real)
print("Parseval:", spectral.lp_norm(c, 2), "vs", np.sqrt(np.mean(f**2)))

# %% Random vector field, then the Leray projection removes its divergence
rng = np.random.default_rng(0)
v = spectral.random_real_field(grid, rng, vector=True)
print("divergence before:", spectral.divergence_defect(grid, v))
p = spectral.leray_project(grid, v)
print("divergence after: ", spectral.divergence_defect(grid, p))

# %% Helmholtz split of a microrotation field
w = spectral.random_real_field(grid, rng, vector=True)
pw, qw = spectral.helmholtz_split(grid, w)
print("div P w:", spectral.divergence_defect(grid, pw), " |curl Q w|:", np.max(np.abs(spectral.curl(grid, qw))))

# %% Lebesgue norms of the same field for several exponents
for r in (1, 2, 4, np.inf):
    print(f"||P v||_L{r} = {spectral.lp_norm(p, r):.4f}")

# %% Snapshots round-trip bit for bit
state = State(grid, p, w, time=0.5)
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demo.mps"
    spectral.save_snapshot(state, path)
    back = spectral.load_snapshot(path)
    print(f"snapshot: {path.stat().st_size} bytes, identical = {np.array_equal(back.u, state.u)}")
