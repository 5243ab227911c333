"""
Exception hierarchy for orbires.

Every failure raised by the library derives from OrbiError so that the
command line front end can map it to an exit status in one place.
"""

from typing import Any, Dict, List, Optional


class OrbiError(Exception):
    """Base class for all orbires errors."""


class InputError(OrbiError, ValueError):
    """Malformed input: bad index, bad rational, schema violation."""

    def __init__(self, message: str, pointer: Optional[str] = None):
        self.pointer = pointer
        if pointer is not None:
            message = f"{pointer}: {message}"
        super().__init__(message)


class PreconditionError(OrbiError):
    """An operation was called outside its precondition."""


class InvariantViolation(OrbiError):
    """An internal invariant failed. Always a bug."""


class ResolutionError(OrbiError):
    """A surgery or the resolution loop could not complete."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class SeparationError(ResolutionError):
    """No admissible (epsilon, delta) pair exists for a stratum."""

    def __init__(self, message: str = "strata not separable at this scale",
                 diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message, diagnostics)


class CutError(OrbiError):
    """The requested symplectic cut is empty or not at a regular value."""

    def __init__(self, message: str, witnesses: Optional[List[Any]] = None):
        self.witnesses = witnesses or []
        super().__init__(message)


class MoserError(OrbiError):
    """The pointwise Moser system is singular at the requested point."""

    def __init__(self, message: str = "outside Moser neighbourhood, shrink delta"):
        super().__init__(message)
