"""Exception types shared across the package."""

from __future__ import annotations


class AlignpressError(Exception):
    """Base class for all package errors."""


class EmptyPattern(AlignpressError):
    """A pattern was constructed or parsed with no symbols."""


class MalformedToken(AlignpressError):
    """A token that cannot be represented (bare role marker, embedded whitespace)."""


class UnknownToken(AlignpressError):
    """A token has no cost under a frequency cost model."""


class DuplicateId(AlignpressError):
    """Two grammar patterns share a pattern id."""


class BadFrequency(AlignpressError):
    """A pattern frequency below 1."""


class ParseError(AlignpressError):
    """Grammar file syntax error, carrying the offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvariantViolation(AlignpressError):
    """A structural invariant (match ordering, alignment shape) was broken."""


class IncompleteCoverage(AlignpressError):
    """Encoding was requested with full coverage but the best alignment
    leaves part of the incoming pattern unmatched.  Carries the best
    partial alignment and its score."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class UnknownCode(AlignpressError):
    """No alignment covers the whole code pattern during decoding."""


class DecodeAmbiguous(AlignpressError):
    """Two equally ranked decode alignments yield different surface output."""


class UnknownPattern(AlignpressError):
    """A pattern was passed that does not belong to the given grammar."""
