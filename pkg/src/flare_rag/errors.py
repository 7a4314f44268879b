"""Error taxonomy shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, data validation
errors exit 2, transport errors exit 3.
"""

from __future__ import annotations


class FlareRagError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(FlareRagError):
    """Bad invocation: unknown flag, missing required input, value out of range."""


class DataError(FlareRagError):
    """Invalid data: malformed files, violated invariants, mismatched shapes."""


class TransportError(FlareRagError):
    """A remote answerer failed. Distinct from a wrong answer.

    When a failure interrupts a retrieval loop the trace accumulated so far
    is attached as ``partial_trace`` (None if nothing ran yet).
    """

    def __init__(self, message: str, partial_trace=None):
        super().__init__(message)
        self.partial_trace = partial_trace
