"""Seeded random instance generators.

All randomness flows through PCG64 generators keyed by explicit
SeedSequence streams (seed, role, index), so every ranking and every
parameter draw is reproducible from the top-level seed alone and
independent of draw order elsewhere.  Stream roles:

====  ======================================
 1    student preference list (index = student)
 2    committee member ranking (index = global member position)
 3    rank parameter draw (index = global member position)
====  ======================================
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import FormatError
from .model import CommitteeMember, Instance, Ranking, School, StudentPrefs

ROLE_STUDENT_PREFS = 1
ROLE_MEMBER_RANKING = 2
ROLE_ALPHA = 3


def _rng(seed, role: int, index: int) -> np.random.Generator:
    parts = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([*parts, role, index]))
    )


@dataclass(frozen=True)
class AlphaMode:
    """How rank parameters are drawn: fixed value, uniform over {1..c},
    or a percentile of the capacity."""

    kind: str              # "fixed" | "uniform" | "percentile"
    value: int | None = None

    @classmethod
    def parse(cls, text: str) -> "AlphaMode":
        if text == "uniform":
            return cls("uniform")
        for prefix in ("fixed", "percentile"):
            if text.startswith(prefix + ":"):
                try:
                    return cls(prefix, int(text.split(":", 1)[1]))
                except ValueError:
                    break
        raise FormatError(
            f"bad alpha mode {text!r}; expected fixed:<k>, uniform, or percentile:<p>"
        )

    def draw(self, capacity: int, rng: np.random.Generator) -> int:
        if self.kind == "fixed":
            return max(1, min(capacity, self.value))
        if self.kind == "percentile":
            return max(1, min(capacity, round(self.value * capacity / 100)))
        return int(rng.integers(1, capacity + 1))

    def __str__(self) -> str:
        return self.kind if self.value is None else f"{self.kind}:{self.value}"


def generate_instance(
    seed,
    n_students: int,
    n_schools: int,
    members_per_school: int,
    capacity: int,
    alpha_mode: AlphaMode | str = "uniform",
) -> Instance:
    """Uniformly random rankings on both sides with the given shape.

    ``seed`` may be an int or a tuple of ints (the bench harness keys each
    trial as (base seed, trial index)).
    """
    if isinstance(alpha_mode, str):
        alpha_mode = AlphaMode.parse(alpha_mode)
    if n_students < 1 or n_schools < 1 or members_per_school < 1 or capacity < 1:
        raise FormatError("generator shape parameters must be positive")

    students = tuple(
        StudentPrefs(
            id=i,
            label=f"s{i}",
            order=tuple(
                int(v)
                for v in _rng(seed, ROLE_STUDENT_PREFS, i).permutation(n_schools)
            ),
        )
        for i in range(n_students)
    )
    schools = []
    member_id = 0
    for h in range(n_schools):
        committee = []
        for _ in range(members_per_school):
            order = tuple(
                int(v)
                for v in _rng(seed, ROLE_MEMBER_RANKING, member_id).permutation(
                    n_students
                )
            )
            alpha = alpha_mode.draw(capacity, _rng(seed, ROLE_ALPHA, member_id))
            committee.append(
                CommitteeMember(
                    id=member_id,
                    label=f"h{h}k{len(committee)}",
                    ranking=Ranking.from_order(order),
                    alpha=Fraction(alpha),
                )
            )
            member_id += 1
        schools.append(
            School(id=h, label=f"h{h}", capacity=capacity, committee=tuple(committee))
        )
    return Instance(students=students, schools=tuple(schools))
