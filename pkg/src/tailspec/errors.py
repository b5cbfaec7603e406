"""Exception types shared across the package."""


class TailspecError(Exception):
    """Base class for all package-specific errors."""


class DomainError(TailspecError, ValueError):
    """An argument lies outside its mathematical domain."""


class InvalidBandwidthError(DomainError):
    """The tail bandwidth k is unusable for the given sample."""


class InvalidLagError(DomainError):
    """The requested lag is not compatible with the sample length."""


class DataError(TailspecError, ValueError):
    """Input data is malformed (NaN/inf values, bad file, too short)."""


class DegenerateDataError(DataError):
    """Input data carries no usable variation (e.g. constant squares)."""


class FitError(TailspecError, RuntimeError):
    """Numerical optimization failed outright.

    The best iterate found so far, if any, is attached as ``best_result``.
    """

    def __init__(self, message, best_result=None):
        super().__init__(message)
        self.best_result = best_result


class CapacityError(TailspecError, RuntimeError):
    """A simulation request exceeds the configured resource budget."""
