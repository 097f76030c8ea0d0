"""Domain model: students, schools, committees, matchings, fractional assignments.

All types are immutable after construction and safe to share across threads.
Students, schools and committee members are addressed by dense integer
indices; human-readable labels are carried alongside for I/O.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterator, Sequence, Union

Number = Union[int, float, Fraction]

DUMMY_LABEL_PREFIX = "~d"


@dataclass(frozen=True)
class Ranking:
    """A strict preference order over all students of an instance.

    ``order`` lists student indices, most preferred first.  ``inverse`` maps
    a student index to its position in ``order``.  The outside option is
    implicitly ranked below every student.
    """

    order: tuple[int, ...]
    inverse: tuple[int, ...]

    @classmethod
    def from_order(cls, order: Sequence[int]) -> "Ranking":
        order = tuple(order)
        inverse = [0] * len(order)
        for pos, student in enumerate(order):
            inverse[student] = pos
        return cls(order=order, inverse=tuple(inverse))

    def position(self, student: int) -> int:
        return self.inverse[student]

    def prefers(self, a: int, b: int) -> bool:
        """True when ``a`` is strictly preferred to ``b``."""
        return self.inverse[a] < self.inverse[b]


@dataclass(frozen=True)
class CommitteeMember:
    """One evaluator: a strict ranking plus a rank parameter.

    ``alpha`` is stored as an exact rational; integral-mode operations check
    integrality rather than silently rounding.
    """

    id: int
    label: str
    ranking: Ranking
    alpha: Fraction


@dataclass(frozen=True)
class School:
    id: int
    label: str
    capacity: int
    committee: tuple[CommitteeMember, ...]

    def alphas(self) -> tuple[Fraction, ...]:
        return tuple(m.alpha for m in self.committee)

    def alpha_sum(self) -> Fraction:
        return sum(self.alphas(), Fraction(0))

    def with_alphas(self, alphas: Sequence[Fraction]) -> "School":
        """Copy of this school with replaced rank parameters (adjusted runs)."""
        if len(alphas) != len(self.committee):
            raise ValueError("alpha count does not match committee size")
        committee = tuple(
            replace(m, alpha=Fraction(a)) for m, a in zip(self.committee, alphas)
        )
        return replace(self, committee=committee)

    def with_capacity(self, capacity: int) -> "School":
        return replace(self, capacity=capacity)


@dataclass(frozen=True)
class StudentPrefs:
    """A student's strict preference order over all schools."""

    id: int
    label: str
    order: tuple[int, ...]
    is_dummy: bool = False

    def position(self, school: int) -> int:
        return self.order.index(school)

    def prefers(self, a: int | None, b: int | None) -> bool:
        """Strict preference between schools; ``None`` (unmatched) is worst."""
        if a is None:
            return False
        if b is None:
            return True
        return self.position(a) < self.position(b)


@dataclass(frozen=True)
class Instance:
    students: tuple[StudentPrefs, ...]
    schools: tuple[School, ...]

    @property
    def n_students(self) -> int:
        return len(self.students)

    @property
    def n_schools(self) -> int:
        return len(self.schools)

    def members(self) -> Iterator[tuple[School, CommitteeMember]]:
        for school in self.schools:
            for member in school.committee:
                yield school, member

    def n_members(self) -> int:
        return sum(len(s.committee) for s in self.schools)

    def total_capacity(self) -> int:
        return sum(s.capacity for s in self.schools)

    def student_labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.students)

    def school_by_label(self, label: str) -> School:
        for school in self.schools:
            if school.label == label:
                return school
        raise KeyError(f"no school labelled {label!r}")

    def original_students(self) -> tuple[StudentPrefs, ...]:
        return tuple(s for s in self.students if not s.is_dummy)


@dataclass(frozen=True)
class Matching:
    """Assignment of each student to at most one school."""

    assignment: tuple[int | None, ...]

    def roster(self, school: int) -> frozenset[int]:
        return frozenset(
            i for i, h in enumerate(self.assignment) if h == school
        )

    def rosters(self, n_schools: int) -> tuple[frozenset[int], ...]:
        out: list[set[int]] = [set() for _ in range(n_schools)]
        for i, h in enumerate(self.assignment):
            if h is not None:
                out[h].add(i)
        return tuple(frozenset(r) for r in out)

    def school_of(self, student: int) -> int | None:
        return self.assignment[student]


def assert_matching_feasible(
    instance: Instance,
    matching: Matching,
    capacities: Sequence[int] | None = None,
) -> None:
    """Shared assertion helper: roster sizes within (possibly adjusted) capacity.

    Each student appearing in at most one roster is structural (``assignment``
    is a map), so only sizes and index ranges need checking.
    """
    if len(matching.assignment) != instance.n_students:
        raise AssertionError("matching does not cover the student set")
    caps = list(capacities) if capacities is not None else [
        s.capacity for s in instance.schools
    ]
    for school in instance.schools:
        size = len(matching.roster(school.id))
        if size > caps[school.id]:
            raise AssertionError(
                f"school {school.label} roster {size} exceeds capacity "
                f"{caps[school.id]}"
            )
    for h in matching.assignment:
        if h is not None and not (0 <= h < instance.n_schools):
            raise AssertionError("assignment references an unknown school")


@dataclass(frozen=True)
class FractionalAssignment:
    """Per-school assignment vectors in [0,1]^n; entries rational or float."""

    rows: tuple[tuple[Number, ...], ...]

    def row(self, school: int) -> tuple[Number, ...]:
        return self.rows[school]

    def school_total(self, school: int) -> Number:
        return sum(self.rows[school])

    def student_total(self, student: int) -> Number:
        return sum(row[student] for row in self.rows)

    def is_integral(self) -> bool:
        return all(v == 0 or v == 1 for row in self.rows for v in row)

    @property
    def n_students(self) -> int:
        return len(self.rows[0]) if self.rows else 0


def validate(instance: Instance) -> list[str]:
    """Return every invariant violation (empty when the instance is valid).

    Violations are data, not faults: callers decide whether to reject.
    """
    out: list[str] = []
    n = instance.n_students
    m = instance.n_schools

    labels = [s.label for s in instance.students]
    if len(set(labels)) != len(labels):
        out.append("student labels are not unique")
    school_labels = [s.label for s in instance.schools]
    if len(set(school_labels)) != len(school_labels):
        out.append("school labels are not unique")
    member_labels = [mem.label for _, mem in instance.members()]
    if len(set(member_labels)) != len(member_labels):
        out.append("committee member labels are not unique")

    for pos, student in enumerate(instance.students):
        if student.id != pos:
            out.append(f"student {student.label} has id {student.id}, expected {pos}")
        if sorted(student.order) != list(range(m)):
            out.append(f"preference list of {student.label} is not a permutation of all schools")

    expected_member = 0
    for pos, school in enumerate(instance.schools):
        if school.id != pos:
            out.append(f"school {school.label} has id {school.id}, expected {pos}")
        if school.capacity < 1:
            out.append(f"school {school.label} has non-positive capacity")
        if not school.committee:
            out.append(f"school {school.label} has an empty committee")
        for member in school.committee:
            if member.id != expected_member:
                out.append(
                    f"member {member.label} has id {member.id}, expected {expected_member}"
                )
            expected_member += 1
            if sorted(member.ranking.order) != list(range(n)):
                out.append(f"ranking of {member.label} is not a permutation")
            elif Ranking.from_order(member.ranking.order) != member.ranking:
                out.append(f"ranking of {member.label} has an inconsistent inverse")
            if member.alpha < 0:
                out.append(f"alpha of {member.label} is negative")
            elif member.alpha > school.capacity:
                out.append(f"alpha of {member.label} exceeds capacity")
    return out


def integral_mode_warnings(instance: Instance) -> list[str]:
    """Non-fatal flags for integral-mode use (alpha outside {1..c_h})."""
    out = []
    for school, member in instance.members():
        if member.alpha < 1:
            out.append(
                f"alpha of {member.label} is below 1; integral-mode support "
                "treats it as approving nobody beyond the rank test"
            )
        elif member.alpha.denominator != 1:
            out.append(f"alpha of {member.label} is not integral")
    return out


def pad_with_dummies(instance: Instance) -> Instance:
    """Append dummy students until the student count reaches total capacity.

    Dummies rank schools in index order, are ranked below every original
    student by every committee member (ordered by index among themselves),
    and never change the relative order of original students.  Idempotent.
    """
    deficit = instance.total_capacity() - instance.n_students
    if deficit <= 0:
        return instance

    used = set(instance.student_labels())
    new_ids = list(range(instance.n_students, instance.n_students + deficit))
    labels = []
    j = 0
    while len(labels) < deficit:
        candidate = f"{DUMMY_LABEL_PREFIX}{j}"
        if candidate not in used:
            labels.append(candidate)
            used.add(candidate)
        j += 1

    canonical = tuple(range(instance.n_schools))
    dummies = tuple(
        StudentPrefs(id=i, label=lab, order=canonical, is_dummy=True)
        for i, lab in zip(new_ids, labels)
    )

    def extend(ranking: Ranking) -> Ranking:
        return Ranking.from_order(ranking.order + tuple(new_ids))

    schools = tuple(
        replace(
            school,
            committee=tuple(
                replace(m, ranking=extend(m.ranking)) for m in school.committee
            ),
        )
        for school in instance.schools
    )
    return Instance(students=instance.students + dummies, schools=schools)
