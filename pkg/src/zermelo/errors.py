"""Exception hierarchy; the CLI maps these onto exit codes 2 and 3."""


class ZermeloError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ValidationError(ZermeloError, ValueError):
    """Input violates a precondition (drift norm bound, zero crossings, ...)."""

    exit_code = 2


class ConfigError(ValidationError):
    """Configuration or expression could not be parsed."""


class DomainError(ValidationError):
    """A point lies outside the open chart domain."""


class NumericalError(ZermeloError, ArithmeticError):
    """Integration or differentiation failed."""

    exit_code = 3


class ChartExitError(DomainError):
    """A trajectory reached the chart guard; ``last_state`` holds the last valid state."""

    exit_code = 3

    def __init__(self, message, t=None, last_state=None):
        super().__init__(message)
        self.t = t
        self.last_state = last_state
