"""Exception types shared across the package."""

from __future__ import annotations


class InputError(ValueError):
    """The caller passed something outside an operation's contract."""


class FormatError(InputError):
    """A text file could not be parsed.

    ``line`` and ``column`` are 1-based; column counts whitespace-separated
    tokens, not characters.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", token {column}"
            where += ": "
        super().__init__(where + message)


class InternalError(AssertionError):
    """An invariant that the mathematics guarantees was observed to fail."""
