"""Exception types raised by the library."""


class RoughPMEError(Exception):
    """Base class for library errors."""


class WindowError(RoughPMEError, ValueError):
    """A requested time window is not covered by a sampled signal."""


class NotBoundedVariation(RoughPMEError, ValueError):
    """A finite-variation signal was required but a rough one was given."""


class NewtonDiverged(RoughPMEError, RuntimeError):
    """The implicit step did not converge within the iteration budget."""

    def __init__(self, message, residual=None, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class NonFiniteError(RoughPMEError, FloatingPointError):
    """A field acquired NaN or Inf values."""


class PartitionTooFine(RoughPMEError, RuntimeError):
    """The admissible time partition would need gaps below the minimum."""
