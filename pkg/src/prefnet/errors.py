"""Exception types shared across the package.

Each class maps to a distinct CLI exit code so callers can tell usage
problems, missing inputs, bad data and bad configuration apart.
"""

from __future__ import annotations


class PrefnetError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class MissingInputError(PrefnetError):
    """An input file or directory does not exist."""

    exit_code = 3

    def __init__(self, path: str, message: str | None = None):
        self.path = str(path)
        super().__init__(message or f"missing input: {self.path}")


class ParseError(PrefnetError):
    """An input file is malformed or violates a data invariant."""

    exit_code = 4

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: "
        if line is not None:
            where = f"{where}line {line}: "
        super().__init__(f"{where}{message}")


class ConfigError(PrefnetError):
    """A configuration value is invalid or infeasible."""

    exit_code = 5
