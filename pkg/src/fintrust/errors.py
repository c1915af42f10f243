"""Exception hierarchy shared by every fintrust module."""


class FintrustError(Exception):
    """Base class for all library errors."""


class ValidationError(FintrustError, ValueError):
    """Input or configuration violates a documented constraint."""


class SchemaError(ValidationError):
    """A file header or JSON document does not match the expected layout."""


class ParseError(ValidationError):
    """A cell could not be parsed as the expected type."""


class DomainError(ValidationError):
    """A numeric value lies outside the domain an operation accepts."""


class DimensionError(ValidationError):
    """Array or layer shapes disagree with the model architecture."""


class NumericError(FintrustError, ArithmeticError):
    """A non-finite value appeared in a computation."""
