"""Exception hierarchy shared across the package.

Every failure mode named by an operation contract maps to one class here, so
callers can branch on type instead of parsing messages.
"""


class RdsConleyError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RdsConleyError):
    """Invalid model, system, grid, or run-configuration input."""


class WindowExhaustedError(RdsConleyError):
    """A shift or symbol lookup stepped outside the finite noise window."""


class NoPreimageError(RdsConleyError):
    """A backward step has no solution in the domain."""


class DivergenceError(RdsConleyError):
    """A time-one map produced a non-finite image (orbit escaped)."""


class FiltrationError(RdsConleyError):
    """Filtration-pair construction exhausted its ring budget.

    ``condition`` names the first failing condition ('i', 'ii' or 'iii').
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class RefinementError(RdsConleyError):
    """A computation needs a finer grid than the refinement budget allows."""


class UsageError(RdsConleyError):
    """An operation was called outside its stated preconditions."""
