"""Pullback behaviour of the random dynamical system.

Start a bundle of very different initial data at time -t along one noise
realisation and look at time 0.  As t grows the images collapse together and
stay inside the absorbing ball given by the uniform bound.
"""
import numpy as np

from roughpme import (CocycleRun, CoefficientSet, Grid, NoiseModel, SineProduct, SolverConfig,
                      absorption_check, attractor_diameter_curve, pullback)

g = Grid.interval(-4.0, 4.0, 60)
coeffs = CoefficientSet(g, [SineProduct(0.5, (np.pi / 4,))])
cfg = SolverConfig(m=2.0, dt=0.01)
run = CocycleRun.sample(NoiseModel.brownian(), 2.0, 0.0, 1e-5, 3, coeffs, cfg, sup=1e3)

rng = np.random.default_rng(0)
centres = rng.uniform(-2, 2, 6)
amps = np.exp(rng.uniform(0, np.log(1e3), 6))
bundle = amps[:, None] * np.maximum(1 - (g.x[None, :] - centres[:, None]) ** 2, 0)

rep = pullback(run, bundle, [0.25, 0.5, 1.0, 1.5, 2.0])
curve = attractor_diameter_curve(rep)
for t, d in zip(curve["t"], curve["diam_L1"]):
    print(f"pulled back from t={t:4.2f}: L1 diameter {d:.3e}")
out = absorption_check(rep, run)
for t, ok in zip(out["times"], out["absorbed"]):
    print(f"t={t:4.2f}: inside the absorbing ball: {bool(ok)}")
