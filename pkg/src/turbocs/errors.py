"""Exception types shared across the package."""


class TurboCSError(Exception):
    """Base class for all package errors."""


class DimensionError(TurboCSError, ValueError):
    """Vector length or index does not match the configured dimensions."""


class InvalidConfigError(TurboCSError, ValueError):
    """A system or experiment configuration violates its invariants."""


class InvalidVarianceError(TurboCSError, ValueError):
    """A variance argument is non-positive or non-finite."""


class NumericalFailureError(TurboCSError, ArithmeticError):
    """NaN/Inf appeared in an iterative algorithm.

    ``iteration`` is the 1-based iteration at which it was detected.
    """

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
