"""Exception hierarchy shared across the package."""


class CovpostError(Exception):
    """Base class for all errors raised by this package."""


class NotPositiveDefiniteError(CovpostError):
    """A matrix required to be positive definite is not."""


class DimensionMismatchError(CovpostError):
    """Operands have incompatible shapes."""


class DegreesOfFreedomTooSmallError(CovpostError):
    """Wishart-type degrees of freedom below the sampleable range."""


class ParameterOutOfRangeError(CovpostError):
    """A distribution or plan parameter lies outside its valid range."""


class NonFiniteDensityError(CovpostError):
    """A log density evaluated to NaN or -inf where a finite value is required."""


class SingularDesignError(CovpostError):
    """X'X is singular where an inverse (least squares, Woodbury) is needed."""


class EmptyChainError(CovpostError):
    """A posterior summary was requested from a chain with no kept draws."""


class PlanError(CovpostError):
    """An experiment plan violates its preconditions."""


class UnknownPresetError(CovpostError):
    """Requested prior preset name is not recognised."""


class PreconditionError(CovpostError):
    """An operation-specific precondition was violated."""
