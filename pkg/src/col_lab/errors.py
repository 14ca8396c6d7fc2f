"""Exception hierarchy shared across the package."""


class ColLabError(Exception):
    """Base class for all package errors."""


class DomainError(ColLabError, ValueError):
    """A point or array does not belong to the expected domain."""


class FeedbackError(ColLabError, ValueError):
    """Feedback vector is non-finite or malformed."""


class NumericError(ColLabError, ArithmeticError):
    """A numerical routine produced an invalid value."""


class ProjectionContractError(ColLabError, RuntimeError):
    """An algorithm step left the decision set."""


class UnsupportedError(ColLabError, NotImplementedError):
    """The requested operation is not available for this problem or set."""


class ConfigurationError(ColLabError, ValueError):
    """Invalid or incomplete experiment configuration."""


class NonConvergenceError(ColLabError, RuntimeError):
    """An iterative solver hit its iteration cap.

    The best iterate and its merit value are kept so callers can inspect
    how far the solver got.
    """

    def __init__(self, message, best=None, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class RateUndefinedError(ColLabError, ValueError):
    """No usable points remain for a log-log rate fit."""
