"""Exception hierarchy shared by every module of the package."""


class MisgpError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(MisgpError, ValueError):
    pass


class InvalidParameter(MisgpError, ValueError):
    pass


class NotFactorizable(MisgpError, ArithmeticError):
    """Raised when no level of the jitter schedule yields a Cholesky factor."""


class NumericalBreakdown(MisgpError, ArithmeticError):
    """Raised when a posterior variance comes out clearly negative."""


class ObservationsMissing(MisgpError, RuntimeError):
    pass


class InstanceTooLarge(MisgpError, ValueError):
    pass


class DegenerateGram(MisgpError, ArithmeticError):
    pass


class ActionNotInSet(MisgpError, ValueError):
    pass


class EmptyActionSet(MisgpError, ValueError):
    pass


class InactiveBase(MisgpError, ValueError):
    pass


class ConfigError(MisgpError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
