"""Certificate-producing checks for every solution concept in the library.

Every check returns a ``Verdict`` listing each violated condition with the
measured value and the bound it had to satisfy, so failures are directly
actionable and certificates can be serialized and re-checked byte-for-byte.

Individual rationality uses ``>=`` and blocking uses ``>`` throughout;
boundary candidates (support exactly at the threshold) are legal on both
sides.  Tie-breaking is a solver concern, never a verifier one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .model import (
    FractionalAssignment,
    Instance,
    Matching,
    Number,
    School,
)
from .support import support_counts, support_integral

MASS_TOL = 1e-6


@dataclass(frozen=True)
class Violation:
    condition: str
    entity: str
    measured: str
    required: str

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "entity": self.entity,
            "measured": self.measured,
            "required": self.required,
        }


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violations: tuple[Violation, ...]

    @classmethod
    def from_violations(cls, violations: Sequence[Violation]) -> "Verdict":
        violations = tuple(violations)
        return cls(ok=not violations, violations=violations)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


@dataclass(frozen=True)
class BetaWindow:
    """Feasible threshold range for one selected set.

    ``lo`` is the largest rejected support (0 with no rejects), ``hi`` the
    smallest accepted support; some beta makes the set acceptable exactly
    when the window is nonempty.
    """

    lo: int
    hi: int

    @property
    def feasible(self) -> bool:
        return self.lo <= self.hi


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(value) if isinstance(value, float) else str(value)


def check_acceptable(
    school: School,
    applicants: frozenset[int] | set[int],
    selected: frozenset[int] | set[int],
    beta: Number,
) -> Verdict:
    """Is ``selected`` an acceptable choice from ``applicants`` at ``beta``?

    Checks non-wastefulness, support >= beta for every accepted student and
    support <= beta for every rejected applicant, all with respect to the
    selected cohort.
    """
    applicants = frozenset(applicants)
    selected = frozenset(selected)
    if not selected <= applicants:
        raise ValueError("selected set is not a subset of the applicant pool")
    violations: list[Violation] = []
    want = min(school.capacity, len(applicants))
    if len(selected) != want:
        violations.append(
            Violation(
                "non-wastefulness",
                f"school {school.label}",
                _fmt(len(selected)),
                f"= {want}",
            )
        )
    for i in sorted(selected):
        measured = support_integral(school, i, selected)
        if measured < beta:
            violations.append(
                Violation(
                    "individual-rationality",
                    f"student {i} @ school {school.label}",
                    _fmt(measured),
                    f">= {_fmt(beta)}",
                )
            )
    for j in sorted(applicants - selected):
        measured = support_integral(school, j, selected)
        if measured > beta:
            violations.append(
                Violation(
                    "no-blocking",
                    f"student {j} @ school {school.label}",
                    _fmt(measured),
                    f"<= {_fmt(beta)}",
                )
            )
    return Verdict.from_violations(violations)


def beta_window(
    school: School,
    applicants: frozenset[int] | set[int],
    selected: frozenset[int] | set[int],
) -> BetaWindow:
    applicants = frozenset(applicants)
    selected = frozenset(selected)
    if not selected <= applicants:
        raise ValueError("selected set is not a subset of the applicant pool")
    if len(selected) != min(school.capacity, len(applicants)):
        raise ValueError("beta window requires a non-wasteful selected set")
    hi = min(support_integral(school, i, selected) for i in selected)
    rejected = applicants - selected
    lo = max((support_integral(school, j, selected) for j in rejected), default=0)
    return BetaWindow(lo=lo, hi=hi)


def frac_window_single(school: School, x: Sequence[Number]) -> BetaWindow:
    """Feasible threshold range for one fractional set: lo is the largest
    strong support off the upper bound, hi the smallest weak support on the
    support; the set is acceptable exactly for thresholds inside."""
    from .support import support_counts

    exact = _exact_entries(x)
    weak, strong = support_counts(school, x)
    lo = 0
    hi = len(school.committee)
    for i, value in enumerate(x):
        if _positive(value, exact):
            hi = min(hi, weak[i])
        if _below_one(value, exact):
            lo = max(lo, strong[i])
    return BetaWindow(lo=lo, hi=hi)


def frac_windows_market(
    instance: Instance, z: FractionalAssignment
) -> list[BetaWindow]:
    """Per-school feasible threshold ranges for a fractional matching.

    The blocking side only counts (student, school) pairs the student
    strictly prefers to their boundary school.
    """
    from .support import support_counts

    n = instance.n_students
    boundaries = [boundary_school(instance, z, i) for i in range(n)]
    windows = []
    for school in instance.schools:
        row = z.row(school.id)
        exact = _exact_entries(row)
        weak, strong = support_counts(school, row)
        lo = 0
        hi = len(school.committee)
        for i in range(n):
            if _positive(row[i], exact):
                hi = min(hi, weak[i])
            improving = instance.students[i].prefers(school.id, boundaries[i])
            if _below_one(row[i], exact) and improving:
                lo = max(lo, strong[i])
        windows.append(BetaWindow(lo=lo, hi=hi))
    return windows


def blocking_pairs(
    instance: Instance,
    matching: Matching,
    betas: Sequence[Number] | Mapping[int, Number],
    capacities: Sequence[int] | None = None,
) -> list[tuple[int, int]]:
    """All (student, school) pairs that block ``matching``.

    A pair blocks when the student strictly prefers the school to their
    assignment and the school has an empty seat or supports the student
    strictly above its threshold.
    """
    caps = list(capacities) if capacities is not None else [
        s.capacity for s in instance.schools
    ]
    rosters = matching.rosters(instance.n_schools)
    pairs: list[tuple[int, int]] = []
    for student in instance.students:
        current = matching.school_of(student.id)
        for school in instance.schools:
            if not student.prefers(school.id, current):
                continue
            roster = rosters[school.id]
            if len(roster) < caps[school.id]:
                pairs.append((student.id, school.id))
            elif support_integral(school, student.id, roster) > betas[school.id]:
                pairs.append((student.id, school.id))
    return pairs


def check_stable(
    instance: Instance,
    matching: Matching,
    betas: Sequence[Number] | Mapping[int, Number],
    capacities: Sequence[int] | None = None,
) -> Verdict:
    """Individual rationality for every assigned student plus no blocking pair."""
    caps = list(capacities) if capacities is not None else [
        s.capacity for s in instance.schools
    ]
    violations: list[Violation] = []
    rosters = matching.rosters(instance.n_schools)
    for school in instance.schools:
        roster = rosters[school.id]
        if len(roster) > caps[school.id]:
            violations.append(
                Violation(
                    "feasibility",
                    f"school {school.label}",
                    _fmt(len(roster)),
                    f"<= {caps[school.id]}",
                )
            )
        for i in sorted(roster):
            measured = support_integral(school, i, roster)
            if measured < betas[school.id]:
                violations.append(
                    Violation(
                        "individual-rationality",
                        f"student {i} @ school {school.label}",
                        _fmt(measured),
                        f">= {_fmt(betas[school.id])}",
                    )
                )
    for student_id, school_id in blocking_pairs(instance, matching, betas, caps):
        school = instance.schools[school_id]
        roster = rosters[school_id]
        measured = support_integral(school, student_id, roster)
        detail = (
            f"unfilled capacity ({len(roster)} < {caps[school_id]})"
            if len(roster) < caps[school_id]
            else _fmt(measured)
        )
        violations.append(
            Violation(
                "blocking-pair",
                f"student {student_id} @ school {school.label}",
                detail,
                f"support <= {_fmt(betas[school_id])} and full capacity",
            )
        )
    return Verdict.from_violations(violations)


def _positive(value: Number, exact: bool) -> bool:
    return value > 0 if exact else value > MASS_TOL * 1e-3


def _below_one(value: Number, exact: bool) -> bool:
    return value < 1 if exact else value < 1 - MASS_TOL * 1e-3


def _exact_entries(values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


def check_frac_acceptable(
    school: School,
    x: Sequence[Number],
    beta: Number,
    mass_tol: float = MASS_TOL,
) -> Verdict:
    """Acceptable-fractional-set check: full mass, weak support >= beta on the
    support, strong support <= beta off the upper bound."""
    exact = _exact_entries(x)
    violations: list[Violation] = []
    total = sum(x)
    ok_mass = total == school.capacity if exact else abs(total - school.capacity) <= mass_tol
    if not ok_mass:
        violations.append(
            Violation(
                "non-wastefulness",
                f"school {school.label}",
                _fmt(total),
                f"= {school.capacity}",
            )
        )
        return Verdict.from_violations(violations)
    weak, strong = support_counts(school, x)
    for i, value in enumerate(x):
        if _positive(value, exact) and weak[i] < beta:
            violations.append(
                Violation(
                    "individual-rationality",
                    f"student {i} @ school {school.label}",
                    _fmt(weak[i]),
                    f">= {_fmt(beta)}",
                )
            )
        if _below_one(value, exact) and strong[i] > beta:
            violations.append(
                Violation(
                    "no-blocking",
                    f"student {i} @ school {school.label}",
                    _fmt(strong[i]),
                    f"<= {_fmt(beta)}",
                )
            )
    return Verdict.from_violations(violations)


def boundary_school(
    instance: Instance, z: FractionalAssignment, student: int
) -> int | None:
    """Least-preferred school with positive mass, for fully assigned students.

    Partially assigned students have no boundary school (None), which makes
    every school count as an improvement for them.
    """
    rows = z.rows
    exact = _exact_entries([rows[h][student] for h in range(len(rows))])
    total = sum(rows[h][student] for h in range(len(rows)))
    fully = total == 1 if exact else abs(total - 1) <= MASS_TOL
    if not fully:
        return None
    prefs = instance.students[student]
    worst = None
    for h in prefs.order:
        if _positive(rows[h][student], exact):
            worst = h
    return worst


def check_frac_stable(
    instance: Instance,
    z: FractionalAssignment,
    betas: Sequence[Number] | Mapping[int, Number],
    mass_tol: float = MASS_TOL,
) -> Verdict:
    """Stable-fractional-matching check.

    Individual rationality wherever mass is positive; no blocking for any
    (student, school) pair the student strictly prefers to their boundary
    school while not fully assigned there.
    """
    violations: list[Violation] = []
    n = instance.n_students
    for school in instance.schools:
        row = z.row(school.id)
        exact = _exact_entries(row)
        total = sum(row)
        ok_mass = (
            total == school.capacity
            if exact
            else abs(total - school.capacity) <= mass_tol
        )
        if not ok_mass:
            violations.append(
                Violation(
                    "non-wastefulness",
                    f"school {school.label}",
                    _fmt(total),
                    f"= {school.capacity}",
                )
            )
    boundaries = [boundary_school(instance, z, i) for i in range(n)]
    for school in instance.schools:
        row = z.row(school.id)
        exact = _exact_entries(row)
        weak, strong = support_counts(school, row)
        for i in range(n):
            if _positive(row[i], exact) and weak[i] < betas[school.id]:
                violations.append(
                    Violation(
                        "individual-rationality",
                        f"student {i} @ school {school.label}",
                        _fmt(weak[i]),
                        f">= {_fmt(betas[school.id])}",
                    )
                )
            improving = instance.students[i].prefers(school.id, boundaries[i])
            if _below_one(row[i], exact) and improving and strong[i] > betas[school.id]:
                violations.append(
                    Violation(
                        "no-blocking",
                        f"student {i} @ school {school.label}",
                        _fmt(strong[i]),
                        f"<= {_fmt(betas[school.id])}",
                    )
                )
    return Verdict.from_violations(violations)
