"""Error taxonomy shared by the whole pipeline.

Every diagnostic carries a source span so the CLI can point at the offending
text.  Sampling-time rejection is *not* an error: it is signalled with
:class:`Rejection`, which the sampler catches and counts.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """A (line, column) position in a source file, 1-based."""

    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        if self.line <= 0:
            return "<builtin>"
        return f"line {self.line}, col {self.column}"


NO_SPAN = Span()


class ScenError(Exception):
    """Base class for all user-facing errors."""

    def __init__(self, message: str, span: Span = NO_SPAN):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span.line > 0:
            return f"{self.span}: {self.message}"
        return self.message


class LexError(ScenError):
    """Illegal character or bad indentation."""


class ParseError(ScenError):
    """Syntax error; carries an expected-token hint when available."""

    def __init__(self, message: str, span: Span = NO_SPAN, expected: str | None = None):
        super().__init__(message, span)
        self.expected = expected


class ResolutionError(ScenError):
    """Specifier resolution failure (duplicate, missing dep, cycle)."""


class ConstructionError(ScenError):
    """Error while executing the construction phase of a program."""


class SampleTimeError(ScenError):
    """Invalid distribution parameters discovered while sampling."""


class ExhaustionError(ScenError):
    """The rejection sampler ran out of iterations."""

    def __init__(self, message: str, histogram: dict[str, int], iterations: int):
        super().__init__(message)
        self.histogram = dict(histogram)
        self.iterations = iterations


class WorldError(ScenError):
    """World file failed schema validation; message includes a JSON path."""


class Rejection(Exception):
    """Internal control flow: the current sampling iteration is rejected."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason
