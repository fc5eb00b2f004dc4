"""Exception hierarchy shared by every ballistic_lab module."""

__all__ = [
    "LabError",
    "OutsideBoxError",
    "DimensionMismatchError",
    "InvalidParameterError",
    "EnumerationBudgetError",
    "WindowError",
    "EmptyInputError",
    "DegenerateVarianceError",
    "HeightOverflowError",
    "SchemaError",
]


class LabError(Exception):
    """Base class; the CLI turns these into a one-line message and exit status 2."""


class OutsideBoxError(LabError, ValueError):
    pass


class DimensionMismatchError(LabError, ValueError):
    pass


class InvalidParameterError(LabError, ValueError):
    pass


class EnumerationBudgetError(LabError, ValueError):
    pass


class WindowError(LabError, ValueError):
    pass


class EmptyInputError(LabError, ValueError):
    pass


class DegenerateVarianceError(LabError, ValueError):
    pass


class HeightOverflowError(LabError, OverflowError):
    pass


class SchemaError(LabError, ValueError):
    """Raised when an on-disk record or checkpoint does not match the expected schema."""
