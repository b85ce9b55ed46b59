"""Exception hierarchy shared by every matchbench module."""


class MatchbenchError(Exception):
    """Base class for all library errors."""


class StructuralError(MatchbenchError, ValueError):
    """Shapes or indices do not fit together (e.g. matching vs. instance size)."""


class ArgumentError(MatchbenchError, ValueError):
    """An argument is outside the domain an operation accepts."""


class ValidationError(MatchbenchError, ValueError):
    """An instance violates the invariant of its preference class."""


class ParseError(MatchbenchError, ValueError):
    """An instance file could not be decoded.

    ``field`` names the offending JSON field and ``line`` the line number in
    the file, when known.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ResourceLimitError(MatchbenchError, RuntimeError):
    """A size guard or enumeration budget was exceeded."""
