"""Compare the solver with the exact source-type profile when the noise is switched off.

Starting from the profile at t = 0.1 the numerical solution should stay on top of
the closed form, keep its mass and keep a compact support.
"""
import numpy as np

from roughpme import CoefficientSet, Constant, Grid, SolverConfig, solve_rough, zero_path
from roughpme.harness import zkb_profile, zkb_support

m, t_start, T = 2.0, 0.1, 0.5
g = Grid.interval(-4.0, 4.0, 400)
coeffs = CoefficientSet(g, [Constant(0.0)])
cfg = SolverConfig(m=m, dt=1e-3)

X0 = zkb_profile(t_start, g.x, m)
traj = solve_rough(X0, zero_path(0.0, T, cfg.dt), cfg, coeffs, save_every=100)

for t, X in zip(traj.times, traj.values):
    exact = zkb_profile(t_start + t, g.x, m)
    err = g.norm(X - exact, "L1") / g.norm(exact, "L1")
    mass = float(np.sum(g.weights * X))
    print(f"t={t:4.2f}  mass={mass:.5f}  relative L1 error={err:.2e}  "
          f"support radius={zkb_support(t_start + t, m):.3f}")
