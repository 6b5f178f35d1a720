"""
The linear system
=================

Eigenvalues of the 2x2 symbol, the damping of the microrotation at low
frequency, the exact propagator checked against a high-precision dense
matrix exponential, and the effective velocity.
"""
import numpy as np

from micropolar import linear, spectral
from micropolar.spectral import Grid3, State, Viscosities

visc = Viscosities.normalized()

# %% Eigenvalues across frequencies; at |xi| = 1 they are 2 +- sqrt(2)
print(f"{'|xi|':>8} {'lambda+':>12} {'lambda-':>12} {'lambda-/(nu s)':>15}")
for xi in (1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0):
    ev = linear.eigenvalues(xi, visc)
    lp_, lm = float(ev.lambda_plus), float(ev.lambda_minus)
    print(f"{xi:8.0e} {lp_:12.6g} {lm:12.6g} {lm / (visc.nu * xi**2):15.6f}")
print("lambda+ -> 4 chi = 2 at low frequency: one branch is damped however small |xi| is")

# %% Exact propagator vs a dense 6x6 matrix exponential in mpmath
rng = np.random.default_rng(2)
xi = np.array([0.3, -0.4, 1.2])
u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
u -= xi * (xi @ u) / (xi @ xi)
om = rng.standard_normal(3) + 1j * rng.standard_normal(3)
for t in (0.1, 1.0, 10.0):
    ru, rw = linear.dense_mode_propagate(xi, u, om, t, visc, dps=20)
    gu, gw = linear.mode_propagate(xi, u, om, t, visc)
    ref = np.concatenate([ru, rw])
    err = np.max(np.abs(np.concatenate([gu, gw]) - ref)) / np.max(np.abs(ref))
    print(f"t = {t:5}: relative error {err:.2e}")

# %% Effective velocity R = curl P omega + Lap u / 2 satisfies a closed equation
grid = Grid3(32)
u = spectral.leray_project(grid, spectral.random_real_field(grid, rng, vector=True))
w = spectral.random_real_field(grid, rng, vector=True)
keep = grid.xi_norm <= 2.0
state = State(grid, u * keep, w * keep)
state.u[:, 0, 0, 0] = state.omega[:, 0, 0, 0] = 0.0
print("R-equation residual:", linear.effective_velocity_residual(state, visc))

# %% Energy of a random state under the exact linear flow
for t in (0.0, 0.5, 2.0, 8.0):
    print(f"t = {t:4}: E = {spectral.energy(linear.linear_propagate(state, t, visc)):.5e}")
