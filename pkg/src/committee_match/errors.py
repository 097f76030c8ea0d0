"""Exception types shared across the solver pipeline."""

from __future__ import annotations


class CommitteeMatchError(Exception):
    """Base class for all package-specific errors."""


class FormatError(CommitteeMatchError):
    """Malformed instance or solution document."""


class ValidationError(CommitteeMatchError):
    """Instance failed validation; carries the violation list."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class SizeGuard(CommitteeMatchError):
    """Oracle input exceeds the exhaustive-search guard."""


class NonConvergence(CommitteeMatchError):
    """Fixed-point iteration did not reach the residual tolerance.

    Carries the best state seen so far for diagnostics.
    """

    def __init__(self, message: str, state=None, residual: float | None = None):
        super().__init__(message)
        self.state = state
        self.residual = residual


class HandoffError(CommitteeMatchError):
    """Snapped equilibrium output failed its exact re-verification."""

    def __init__(self, message: str, verdict=None, state=None):
        super().__init__(message)
        self.verdict = verdict
        self.state = state


class Infeasible(CommitteeMatchError):
    """LP witness violates its own system (signals a construction bug)."""


class RoundingStalled(CommitteeMatchError):
    """Iterative rounding made no progress; carries the live system state."""

    def __init__(self, message: str, basis=None):
        super().__init__(message)
        self.basis = basis


class BoundViolation(CommitteeMatchError):
    """Rounded output exceeded its drift bound even after the fallback pass."""
