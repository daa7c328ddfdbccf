"""Exception types raised by zenofisher."""


class ZenoError(Exception):
    """Base class for all library errors."""


class ArgumentError(ZenoError, ValueError):
    """Invalid argument: wrong shape, non-Hermitian input, degenerate support..."""


class ResourceError(ZenoError, MemoryError):
    """Requested problem size exceeds the dense-storage budget."""


class EvaluationError(ZenoError, ArithmeticError):
    """A survival probability was non-positive where its logarithm is needed."""


class QuadratureError(EvaluationError):
    """Adaptive quadrature did not converge within the subdivision budget."""


class SingularityError(ZenoError, ArithmeticError):
    """Fisher quantity is singular, e.g. P* == 1 exactly."""


class EstimationError(ZenoError, ValueError):
    """Observed frequency cannot be inverted on the estimation bracket."""
