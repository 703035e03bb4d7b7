"""Exception types shared by the lab modules."""

from typing import Any, Optional


class LabError(Exception):
    """Base class for every error raised by the lab."""


class DigitBudgetExceeded(LabError, MemoryError):
    """An exact quantity would need more bits than the configured digit budget."""

    def __init__(self, what: str, bits_needed: int, budget: int):
        self.what = what
        self.bits_needed = bits_needed
        self.budget = budget
        super().__init__(
            f"{what} needs {bits_needed} bits, digit budget is {budget} bits"
        )


class PreconditionError(LabError, ValueError):
    """An operation was called outside its documented domain."""


class SearchExhausted(LabError, RuntimeError):
    """A bounded search finished without meeting its target."""

    def __init__(self, message: str, best: Optional[Any] = None):
        self.best = best
        super().__init__(message)


class VerificationError(LabError, RuntimeError):
    """An independent recomputation disagrees with a claimed result."""

    def __init__(self, message: str, offending: Optional[Any] = None):
        self.offending = offending
        super().__init__(message)


class InsufficientSamples(LabError, RuntimeError):
    """A rejection sampler accepted too few points to be meaningful."""
