"""Explicit pathwise bounds for the transformed solution.

A partition of [0, T] adapted to the noise is built first.  On it the piecewise
supersolution dominates every solution whose initial datum it dominates, and the
data-independent bound controls all solutions after any positive time.
"""
import numpy as np

from roughpme import (CoefficientSet, Grid, NoiseModel, SineProduct, SolverConfig,
                      build_supersolution, choose_partition, sample_path, solve_transformed)
from roughpme.bounds import sigma0_for, uniform_bound_U

m, T = 2.0, 2.0
g = Grid.interval(-1.0, 1.0, 100)
coeffs = CoefficientSet(g, [SineProduct(0.3, (np.pi / 2,))])
cfg = SolverConfig(m=m, dt=1e-3)
z = sample_path(NoiseModel.brownian(), 0.0, T, 1e-4, seed=2)

taus = choose_partition(z, coeffs, m, grid=g)
print(f"partition with {len(taus) - 1} pieces: {np.round(taus, 3)}")

Y0 = 3.0 * np.maximum(1 - (g.x / 0.5) ** 2, 0)
K = build_supersolution(sigma0_for(Y0.max(), taus, coeffs, z, m), taus, coeffs, z, m)
U = uniform_bound_U(taus, coeffs, z, m)
traj = solve_transformed(Y0, z, cfg, coeffs, save_every=100)
for t, Y in zip(traj.times[1:], traj.values[1:]):
    print(f"t={t:4.2f}  max Y={Y.max():.4f}  max K={K.evaluate(t).max():.4f}  "
          f"max U={U.evaluate(t).max():.4f}")
