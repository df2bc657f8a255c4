"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class SchemeMismatchError(ValueError):
    """Scheme is not valid for the given relay count or realization."""
