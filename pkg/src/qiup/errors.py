"""Exception hierarchy shared by the library and the command line."""


class QiupError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(QiupError, ValueError):
    """A physical parameter is out of its admissible range."""


class ConfigError(QiupError):
    """A configuration file or override could not be interpreted."""


class NumericalError(QiupError):
    """A numerical procedure cannot produce a trustworthy answer."""


class GridResolutionError(NumericalError):
    """Momentum grid too small or too coarse for the brute-force sum."""

    def __init__(self, message, required_extent=None, required_count=None):
        super().__init__(message)
        self.required_extent = required_extent
        self.required_count = required_count


class QuadratureResolutionError(NumericalError):
    """Sampled object is too coarse for midpoint quadrature."""

    def __init__(self, message, required_pitch=None):
        super().__init__(message)
        self.required_pitch = required_pitch


class MalformedProfileError(NumericalError):
    """A two-point profile is not symmetric about the camera origin."""


class BracketError(NumericalError):
    """A root search bracket does not straddle the target value."""


class ReducedKernelWarning(UserWarning):
    """The reduced (correlation-only) kernel may be inaccurate for these parameters."""
