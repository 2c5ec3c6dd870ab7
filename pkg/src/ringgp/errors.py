"""Exception types raised across the package."""


class RingGPError(Exception):
    """Base class for all package errors."""


class NotHermitian(RingGPError, ValueError):
    pass


class NotUnitary(RingGPError, ValueError):
    pass


class NotOrthonormal(RingGPError, ValueError):
    pass


class DimensionMismatch(RingGPError, ValueError):
    pass


class DegeneratePath(RingGPError, ValueError):
    """Consecutive frames of a path do not overlap with full rank."""


class MissingSigma(RingGPError, KeyError):
    pass


class RepeatedIndex(RingGPError, ValueError):
    pass


class SingularT(RingGPError, ValueError):
    """The coupling matrix T has a vanishing singular value."""


class FirstPulseNotOffDiagonal(RingGPError, ValueError):
    """The first pulse of a composition does not map H_1 <-> H_2 exactly."""


class StateOutsideSubspace(RingGPError, ValueError):
    pass


class ConvergenceFailure(RingGPError, RuntimeError):
    """A search did not reach its tolerance; ``best`` holds the best candidate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
