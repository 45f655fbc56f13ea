"""Exception types shared across the package."""


class HexaFuzzError(Exception):
    """Base class for all package errors."""


class ConfigError(HexaFuzzError, ValueError):
    """Invalid configuration or parameter set."""


class ContractError(HexaFuzzError, ValueError):
    """A precondition of an operation was violated (dimensions, indices, floors)."""


class EmptyRuleBaseError(ContractError):
    """An operation needing at least one rule was called on an empty rule base."""


class DivergenceError(HexaFuzzError, ArithmeticError):
    """An iterative solve hit its iteration cap without converging."""

    def __init__(self, message, last_iterate):
        super().__init__(message)
        self.last_iterate = last_iterate


class NumericalError(HexaFuzzError, FloatingPointError):
    """A quantity became non-finite. ``field`` names the offending term."""

    def __init__(self, message, field):
        super().__init__(message)
        self.field = field
