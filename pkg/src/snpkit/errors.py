"""Exception types shared across the package."""

from __future__ import annotations


class SnpkitError(Exception):
    """Base class for all package errors."""


class InputError(SnpkitError):
    """Raised when an operation is applied outside its declared fragment."""


class SnpParseError(SnpkitError):
    """Raised on malformed sentence or structure text.

    Carries the 1-based line and column of the offending token when known.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class BudgetExceeded(SnpkitError):
    """Raised when a bounded search runs out of its step budget.

    Distinguishes "gave up" from "proved absent"; callers must not conflate
    the two.
    """

    def __init__(self, stage: str, limit: int):
        self.stage = stage
        self.limit = limit
        super().__init__(f"budget exceeded in {stage} (limit {limit})")
