"""Exception hierarchy shared by every stage of the pipeline."""


class PlaystyleError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PlaystyleError, ValueError):
    """Input data violates a documented invariant.

    ``line`` is the 1-based line number when the error came from a
    line-delimited file, otherwise ``None``.
    """

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = []
        if source is not None:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class SchemaError(ValidationError):
    """A record has the wrong shape (missing fields, wrong counts)."""


class DanglingReferenceError(ValidationError):
    """A match references player ids that are not in the corpus."""

    def __init__(self, missing, line=None, source=None):
        self.missing = sorted(missing)
        super().__init__(
            "unknown player ids: " + ", ".join(self.missing), line=line, source=source
        )


class UnknownCharacterError(ValidationError):
    """A character id is absent from the official class table."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__("characters missing from class table: " + ", ".join(self.missing))


class NumericalError(PlaystyleError, ArithmeticError):
    """A numerical routine could not produce a usable result."""
