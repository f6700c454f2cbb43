"""Exception types raised by the simulator."""


class InvalidArgumentError(ValueError):
    """An argument violates an operation's precondition."""


class UnsupportedSizeError(InvalidArgumentError):
    """Requested ZCZ family shape is not on the supported grid."""

    def __init__(self, message, supported=None):
        super().__init__(message)
        self.supported = supported


class ConfigurationError(ValueError):
    """A configuration is infeasible or malformed."""


class NoSignalError(ValueError):
    """Spectrum carries no power; the CFO is unobservable."""


class BudgetError(RuntimeError):
    """A computation would exceed its hypothesis or trial budget."""


class NumericError(ArithmeticError):
    """A linear system is singular to working precision."""
