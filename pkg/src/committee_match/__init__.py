"""Committee-governed admissions: acceptable choice sets and near-stable matchings.

The library computes equilibrium-relaxed fractional solutions for
committee-run schools (personalized-price fixed points over random-budget
demands), rounds them to integral ones in exact rational arithmetic, and
verifies every output against the solution-concept definitions with
machine-checkable certificates.
"""

from .model import (
    CommitteeMember,
    FractionalAssignment,
    Instance,
    Matching,
    Ranking,
    School,
    StudentPrefs,
    pad_with_dummies,
    validate,
)
from .verify import (
    BetaWindow,
    Verdict,
    beta_window,
    blocking_pairs,
    boundary_school,
    check_acceptable,
    check_frac_acceptable,
    check_frac_stable,
    check_stable,
)

__version__ = "0.1.0"

__all__ = [
    "CommitteeMember",
    "FractionalAssignment",
    "Instance",
    "Matching",
    "Ranking",
    "School",
    "StudentPrefs",
    "pad_with_dummies",
    "validate",
    "BetaWindow",
    "Verdict",
    "beta_window",
    "blocking_pairs",
    "boundary_school",
    "check_acceptable",
    "check_frac_acceptable",
    "check_frac_stable",
    "check_stable",
    "__version__",
]
