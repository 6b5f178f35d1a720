"""
Nonlinear runs
==============

Integrating-factor Runge-Kutta on the full system: a Kato-type oscillating
initial velocity, the smallness functional, energy decay, and the time-step
guard.
"""
import numpy as np

from micropolar import solver, spectral
from micropolar.solver import SolverConfig
from micropolar.spectral import Grid3

grid = Grid3(32)

# %% Kato data: small in negative-index Besov norms though not small in L^2
data = solver.kato_oscillating(grid, eps=1 / 4, amplitude=2.0)
print("||u0||_2 =", spectral.lp_norm(data.u, 2))
print("smallness functional:", {k: round(v, 4) for k, v in solver.smallness_report(data, j0=2).items()
                                 if isinstance(v, float)})

# %% A step that is too long is refused, with a suggestion
try:
    solver.step(data, SolverConfig(dt=1.0, t_end=1.0))
except solver.CFLError as exc:
    print("CFL guard:", exc)

# %% Run to t = 1 with IF-RK4 and record norms on the way
times = list(np.linspace(0, 1.0, 11))
cfg = SolverConfig(dt=0.02, t_end=1.0, snapshot_times=[1.0], norm_times=times, norm_requests=[(0, 2), (1, 2)], j0=2)
res = solver.simulate(data, cfg)
print(f"{res.steps} steps, max|u| growth {res.growth_factor:.3f}")
print(f"{'t':>5} {'E':>10} {'||u||_2':>10} {'||Lu||_2':>10} {'||w||_2':>10}")
for i, t in enumerate(res.series.times):
    v = {k: res.series.values[k][i] for k in ("E", "u:0:2", "u:1:2", "omega:0:2")}
    print(f"{t:5.2f} {v['E']:10.4e} {v['u:0:2']:10.4e} {v['u:1:2']:10.4e} {v['omega:0:2']:10.4e}")

final = res.snapshots[-1]
print("divergence at t=1:", spectral.divergence_defect(grid, final.u))
