"""Exception hierarchy shared across the package."""


class PhaseMomentsError(Exception):
    """Base class for package errors."""


class GridResolutionError(PhaseMomentsError):
    """Grid too coarse, too short, or aliasing detected."""


class TruncationError(PhaseMomentsError):
    """Number-basis truncation insufficient for the requested computation."""


class UnsupportedModelError(PhaseMomentsError):
    """Operation not defined for this measurement model."""


class InvalidMomentSequenceError(PhaseMomentsError):
    """Input violates moment-sequence constraints (signs, Hankel positivity)."""


class IllPosedError(PhaseMomentsError):
    """Deconvolution problem numerically ill posed on this grid."""


class DivergenceError(PhaseMomentsError):
    """Series diverged; carries the last stable partial sum in ``partial``."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class UnreliableDerivativeError(PhaseMomentsError):
    """Polynomial derivative fit did not reach the required residual."""


class ConfigError(PhaseMomentsError):
    """Invalid experiment configuration (CLI exit code 2)."""
