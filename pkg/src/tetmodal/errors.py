"""Exception hierarchy.

``SpecError`` subclasses signal a violated invariant of a problem description
and carry the invariant's name, which the CLI reports on exit code 3.
"""

from __future__ import annotations


class TetmodalError(Exception):
    """Base class for all package errors."""


class SpecError(TetmodalError, ValueError):
    """A problem description violates a named invariant."""

    invariant = "SpecError"

    def __init__(self, message: str):
        super().__init__(f"{self.invariant}: {message}")


class DegenerateBox(SpecError):
    invariant = "DegenerateBox"


class ZeroSpacing(SpecError):
    invariant = "ZeroSpacing"


class NonDivisibleExtent(SpecError):
    invariant = "NonDivisibleExtent"


class InvalidPrimitive(SpecError):
    invariant = "InvalidPrimitive"


class NoPersistentOptimum(SpecError):
    invariant = "NoPersistentOptimum"


class InvalidNesting(SpecError):
    invariant = "InvalidNesting"


class IrrationalScale(SpecError):
    invariant = "IrrationalScale"


class MisalignedChild(SpecError):
    invariant = "MisalignedChild"


class InvalidTransform(SpecError):
    invariant = "InvalidTransform"


class OutOfDomain(TetmodalError, ValueError):
    """A query point lies outside the mesh box."""


class SpecParseError(TetmodalError):
    """Malformed problem-spec text; ``line`` and ``column`` are 1-based."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None, source: str = "<spec>"):
        self.line = line
        self.column = column
        self.source = source
        where = source if line is None else f"{source}:{line}:{column}"
        super().__init__(f"{where}: {message}")
