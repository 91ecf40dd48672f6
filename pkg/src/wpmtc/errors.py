"""Exception hierarchy shared by all modules."""


class WpmtcError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(WpmtcError, ValueError):
    """Tangent geometry is undefined (viewpoint inside or on a cluster disk)."""


class DomainError(WpmtcError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class InfeasibleDensityError(WpmtcError, ValueError):
    """Requested thinned density cannot be reached for the given minimum distance."""


class NumericError(WpmtcError, ArithmeticError):
    """Numerical procedure failed to reach the requested accuracy.

    Attributes:
        achieved: error estimate actually reached, when known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class InitializationError(WpmtcError, ValueError):
    """Proportional-fair state cannot produce finite weights."""


class ConfigError(WpmtcError, ValueError):
    """Scenario configuration could not be parsed or failed validation."""
