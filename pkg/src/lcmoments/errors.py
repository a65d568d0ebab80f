"""Exception hierarchy shared across the package."""


class MomentsError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(MomentsError, ValueError):
    """An argument violates a documented precondition."""


class OutOfRangeError(MomentsError, ValueError):
    """A parameter lies outside the supported operating range."""


class UnboundedProgramError(MomentsError):
    """The requested maximization has no finite optimum."""


class UnsupportedFamilyError(MomentsError):
    """The operation has no closed form for this distribution family."""


class SolverError(MomentsError):
    """An iterative solver failed to reach its accuracy target."""
