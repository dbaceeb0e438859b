"""Exception hierarchy.

Input problems (bad files, out-of-range arguments, violated contracts)
derive from ``ValueError``; numerical breakdowns derive from
``ArithmeticError`` so callers can tell the two apart.
"""


class TSPCAError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TSPCAError, ValueError):
    """Malformed CSV input."""


class ContractError(TSPCAError, ValueError):
    """A documented precondition of an operation was violated."""


class RangeError(ContractError):
    """A lag, horizon or order argument is outside its admissible range."""


class SpecificationError(ContractError):
    """Estimated and true segmentations are not comparable group-by-group."""


class DesignError(ContractError):
    """A simulation design is invalid (e.g. a non-causal recursion)."""


class NumericalError(TSPCAError, ArithmeticError):
    """Base class for numerical failures."""


class SingularCovarianceError(NumericalError):
    """A covariance matrix is (numerically) singular."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class DegenerateSeriesError(NumericalError):
    """A series has zero variance where a positive one is needed."""


class ConditioningError(NumericalError):
    """A regression design matrix is too ill-conditioned to solve."""


class StageError(TSPCAError):
    """Wraps an error raised inside one stage of a multi-stage pipeline.

    The original exception is kept as ``__cause__`` and ``cause``.
    """

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
