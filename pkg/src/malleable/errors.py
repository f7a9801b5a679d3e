"""Exception hierarchy shared by all modules."""


class MalleableError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(MalleableError, ValueError):
    """Input data violates an invariant (maps to CLI exit code 2)."""


class UndefinedRowError(ValidationError, KeyError):
    """A conditional row was requested for a zero-probability symbol."""

    def __str__(self):
        return Exception.__str__(self)


class ResourceLimitError(MalleableError):
    """A configured enumeration or search limit would be exceeded (exit code 3)."""


class NumericalError(MalleableError, ArithmeticError):
    """An iterative update lost all numerical mass."""


class DecodeError(MalleableError):
    """A codeword could not be mapped back to a source block."""
