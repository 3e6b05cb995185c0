"""Porous-medium and fast-diffusion equations with multiplicative rough noise.

The equation ``dX = Lap(|X|^m sgn X) dt + sum_k f_k X dz^(k)`` is solved through
the transformation ``Y = e^mu X``, ``mu = -sum_k f_k z^(k)``, which turns it into
a pathwise parabolic problem with random coefficients.
"""

from .bounds import (build_supersolution, choose_partition, estimate_contraction_constant,
                     fast_diffusion_bound, uniform_bound_U)
from .coefficients import CoefficientSet, Constant, Gaussian, SineProduct, make_coefficient
from .exceptions import (NewtonDiverged, NonFiniteError, NotBoundedVariation, PartitionTooFine,
                         RoughPMEError, WindowError)
from .geometry import Grid
from .nonlinearity import PhiSpec, phi, phi_delta, psi_delta
from .rds import CocycleRun, absorption_check, attractor_diameter_curve, cocycle, pullback
from .signals import (NoiseModel, SignalPath, mollify, piecewise_linear, sample_path, shift_path,
                      zero_path)
from .solver import (SolverConfig, Trajectory, limit_solution, solve_direct_bv, solve_rough,
                     solve_transformed, very_weak_residual)

__version__ = "0.1.0"
