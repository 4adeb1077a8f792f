"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class RangeError(OverflowError):
    """A result or intermediate exceeds the representable/supported range."""


class NumericError(ArithmeticError):
    """A numerical procedure failed to reach its accuracy contract."""
