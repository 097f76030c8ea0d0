"""Support computation: rank benchmarks, upper sets, weak/strong support.

Two modes share one approval notion.  Integral mode benchmarks a candidate
against the alpha-th favourite inside a selected set; fractional mode
benchmarks against the most-preferred student at which the cumulative
selected mass reaches alpha.  Comparisons against an absent benchmark
always succeed.

Cumulative-mass comparisons are exact when every entry is rational and use
a 1e-9 tolerance otherwise (equilibrium states are floating point, rounded
ones are rational; both reuse this module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .model import Number, Ranking, School

FLOAT_TOL = 1e-9


def _is_exact(values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


@dataclass(frozen=True)
class UpperSets:
    """Weak/strong upper sets of one member at one assignment.

    ``weak`` minus ``strong`` is exactly the rank student when one exists;
    with no rank student both sets cover all students.
    """

    weak: frozenset[int]
    strong: frozenset[int]
    rank_student: int | None


def alpha_rank_integral(
    ranking: Ranking, selected: frozenset[int] | set[int], alpha: Number
) -> int | None:
    """The ceil(alpha)-th most preferred member of ``selected``; None if short.

    Integral mode expects alpha >= 1; a non-integral alpha uses its ceiling
    as the rank index.
    """
    if alpha < 1:
        raise ValueError("integral rank benchmark requires alpha >= 1")
    if len(selected) < alpha:
        return None
    index = math.ceil(alpha)
    seen = 0
    for student in ranking.order:
        if student in selected:
            seen += 1
            if seen == index:
                return student
    return None


def approves_integral(
    ranking: Ranking, selected: frozenset[int] | set[int], alpha: Number, candidate: int
) -> bool:
    """Does this member rank ``candidate`` weakly above their benchmark?

    Counting form: approval holds iff strictly fewer than ceil(alpha)
    selected students are strictly preferred to the candidate.  Equivalent
    to comparing against ``alpha_rank_integral`` for alpha >= 1 and extends
    it to adjusted parameters (alpha of 0 approves nobody; an undersized
    selected set approves everybody).
    """
    if alpha <= 0:
        return False
    if len(selected) < alpha:
        return True
    pos = ranking.position(candidate)
    above = sum(1 for s in selected if ranking.inverse[s] < pos)
    return above < math.ceil(alpha)


def support_integral(
    school: School, candidate: int, selected: frozenset[int] | set[int]
) -> int:
    """Number of committee members approving ``candidate`` given ``selected``."""
    selected = frozenset(selected)
    return sum(
        1
        for member in school.committee
        if approves_integral(member.ranking, selected, member.alpha, candidate)
    )


def alpha_rank_fractional(
    ranking: Ranking, x: Sequence[Number], alpha: Number, capacity: int
) -> int | None:
    """Most-preferred student whose cumulative mass reaches alpha.

    Returns None when the total assigned mass falls short of the capacity.
    """
    exact = _is_exact(x)
    tol = 0 if exact else FLOAT_TOL
    total = sum(x)
    if total < capacity - tol:
        return None
    cum = 0
    for student in ranking.order:
        cum += x[student]
        if cum >= alpha - tol:
            return student
    return None


def upper_sets(
    ranking: Ranking, x: Sequence[Number], alpha: Number, capacity: int
) -> UpperSets:
    """Weak and strong upper sets around the fractional rank benchmark.

    When a rank student exists, asserts the cumulative-mass sandwich
    (weak mass >= alpha >= strong mass >= alpha - 1); a failure here is an
    internal inconsistency, never a user error.
    """
    rank_student = alpha_rank_fractional(ranking, x, alpha, capacity)
    if rank_student is None:
        everyone = frozenset(range(len(x)))
        return UpperSets(weak=everyone, strong=everyone, rank_student=None)
    cut = ranking.position(rank_student)
    weak = frozenset(ranking.order[: cut + 1])
    strong = frozenset(ranking.order[:cut])

    tol = 0 if _is_exact(x) else FLOAT_TOL
    weak_mass = sum(x[i] for i in weak)
    strong_mass = sum(x[i] for i in strong)
    assert weak_mass >= alpha - tol, "weak upper-set mass below alpha"
    assert strong_mass <= alpha + tol, "strong upper-set mass above alpha"
    assert strong_mass >= alpha - 1 - tol, "strong upper-set mass below alpha - 1"
    return UpperSets(weak=weak, strong=strong, rank_student=rank_student)


def weak_support(school: School, candidate: int, x: Sequence[Number]) -> int:
    return sum(
        1
        for member in school.committee
        if candidate
        in upper_sets(member.ranking, x, member.alpha, school.capacity).weak
    )


def strong_support(school: School, candidate: int, x: Sequence[Number]) -> int:
    return sum(
        1
        for member in school.committee
        if candidate
        in upper_sets(member.ranking, x, member.alpha, school.capacity).strong
    )


def all_upper_sets(school: School, x: Sequence[Number]) -> list[UpperSets]:
    """Upper sets of every committee member, in committee order."""
    return [
        upper_sets(member.ranking, x, member.alpha, school.capacity)
        for member in school.committee
    ]


def support_counts(
    school: School, x: Sequence[Number]
) -> tuple[list[int], list[int]]:
    """(weak, strong) support of every student, computing upper sets once."""
    n = len(x)
    weak = [0] * n
    strong = [0] * n
    for sets in all_upper_sets(school, x):
        for i in sets.weak:
            weak[i] += 1
        for i in sets.strong:
            strong[i] += 1
    return weak, strong
