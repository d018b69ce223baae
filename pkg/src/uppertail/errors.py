"""Exception types shared across the package."""


class UpperTailError(Exception):
    """Base class for all package errors."""


class ValidationError(UpperTailError):
    """Invalid input: bad parameter ranges, malformed graphs, size caps exceeded."""


class ResourceBudgetError(UpperTailError):
    """An enumeration or sampling loop exceeded its configured budget."""
