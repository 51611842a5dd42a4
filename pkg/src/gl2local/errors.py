"""Shared exception types."""


class PrecisionError(ArithmeticError):
    """A result is indistinguishable from zero (or too coarse) at working precision."""


class BudgetError(RuntimeError):
    """An enumeration or table would exceed the configured size budget."""


class ConstructionError(RuntimeError):
    """A requested object does not exist or could not be built from the given data."""
