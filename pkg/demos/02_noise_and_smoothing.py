"""Drive the equation with a Brownian path and with smoothed versions of it.

Piecewise-linear interpolations and mollifications of the same path are fed to
the solver.  As they approach the path the solutions approach the one driven by
the path itself, whichever smoothing is used.
"""
import numpy as np

from roughpme import (CoefficientSet, Grid, NoiseModel, SineProduct, SolverConfig, mollify,
                      piecewise_linear, sample_path, solve_rough)

g = Grid.interval(-4.0, 4.0, 120)
coeffs = CoefficientSet(g, [SineProduct(0.5, (np.pi / 4,))])
cfg = SolverConfig(m=2.0, dt=1e-3)
T = 0.5
z = sample_path(NoiseModel.brownian(), 0.0, T, cfg.dt, seed=1)
X0 = np.maximum(1 - g.x**2, 0)

ref = solve_rough(X0, z, cfg, coeffs).final
for level in (2, 4, 6, 8):
    X = solve_rough(X0, piecewise_linear(z, level), cfg, coeffs).final
    print(f"piecewise linear, level {level}: L1 distance {g.norm(X - ref, 'L1'):.3e}")
for eps in (0.1, 0.03, 0.01):
    X = solve_rough(X0, mollify(z, eps), cfg, coeffs).final
    print(f"mollified, eps {eps}: L1 distance {g.norm(X - ref, 'L1'):.3e}")
