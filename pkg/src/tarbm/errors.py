"""Exception types shared across the package."""


class TarbmError(Exception):
    """Base class for all package errors."""


class ShapeError(TarbmError):
    """Operand shapes are incompatible. Message names both shapes."""


class DomainError(TarbmError):
    """An argument is outside its valid domain."""


class CapacityError(TarbmError):
    """Exact enumeration requested on a model too large to enumerate."""


class ParseError(TarbmError):
    """A file could not be parsed. Message carries location context."""
