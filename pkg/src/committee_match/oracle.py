"""Brute-force ground truth on small instances.

Everything here is deliberately naive: enumerate, check, collect.  The
point is to be obviously correct so solver outputs can be judged against
it.  Guards are hard errors, not truncations; a partial oracle is worse
than none.
"""

from __future__ import annotations

from itertools import combinations
from math import inf
from typing import Iterator, Sequence

from .errors import SizeGuard
from .model import Instance, Matching, Number, School
from .verify import BetaWindow, beta_window, check_stable

ACCEPTABLE_POOL_GUARD = 22
STABLE_SPACE_GUARD = 10_000_000


def enumerate_acceptable(
    school: School, applicants: frozenset[int] | set[int] | Sequence[int]
) -> list[tuple[frozenset[int], BetaWindow]]:
    """Every non-wasteful subset with a feasible beta window.

    Sorted by (window.lo, sorted member indices) so output order never
    depends on enumeration order.
    """
    pool = frozenset(applicants)
    if len(pool) > ACCEPTABLE_POOL_GUARD:
        raise SizeGuard(
            f"applicant pool of {len(pool)} exceeds the oracle guard "
            f"({ACCEPTABLE_POOL_GUARD})"
        )
    size = min(school.capacity, len(pool))
    out = []
    for combo in combinations(sorted(pool), size):
        selected = frozenset(combo)
        window = beta_window(school, pool, selected)
        if window.feasible:
            out.append((selected, window))
    out.sort(key=lambda item: (item[1].lo, sorted(item[0])))
    return out


def min_beta(
    school: School, applicants: frozenset[int] | set[int] | Sequence[int]
) -> Number:
    """Smallest feasible threshold over all acceptable sets; inf when none."""
    feasible = enumerate_acceptable(school, applicants)
    if not feasible:
        return inf
    return min(window.lo for _, window in feasible)


def _assignments(instance: Instance) -> Iterator[tuple[int | None, ...]]:
    """All capacity-feasible assignments, lexicographic over student choices.

    Choices per student are ordered (None, school 0, school 1, ...) and the
    search prunes branches that already exceed some capacity.
    """
    n = instance.n_students
    caps = [s.capacity for s in instance.schools]
    load = [0] * instance.n_schools
    current: list[int | None] = [None] * n

    def rec(i: int) -> Iterator[tuple[int | None, ...]]:
        if i == n:
            yield tuple(current)
            return
        current[i] = None
        yield from rec(i + 1)
        for h in range(instance.n_schools):
            if load[h] < caps[h]:
                load[h] += 1
                current[i] = h
                yield from rec(i + 1)
                current[i] = None
                load[h] -= 1

    yield from rec(0)


def enumerate_stable(
    instance: Instance, betas: Sequence[Number]
) -> list[Matching]:
    """All feasible matchings passing the stability check, in lexicographic
    order of their assignment tuples (None sorts before school 0)."""
    space = (instance.n_schools + 1) ** instance.n_students
    if space > STABLE_SPACE_GUARD:
        raise SizeGuard(
            f"assignment space of {space} exceeds the oracle guard "
            f"({STABLE_SPACE_GUARD})"
        )
    out = []
    for assignment in _assignments(instance):
        matching = Matching(assignment=assignment)
        if check_stable(instance, matching, betas).ok:
            out.append(matching)
    out.sort(key=lambda m: tuple(-1 if h is None else h for h in m.assignment))
    return out
