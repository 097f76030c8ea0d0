"""Instance and solution documents (JSON syntax, versioned).

The instance format:

.. code-block:: json

    {
      "format": 1,
      "students": [{"id": "a", "prefs": ["h1", "h2"]}],
      "schools": [
        {"id": "h1", "capacity": 2,
         "committee": [{"id": "k1", "alpha": 1, "ranking": ["a", "b"]}]}
      ],
      "solver": {"eps": 0.25, "damping": 0.01, "tol": 1e-7,
                 "max_iter": 50000, "seed": 0, "delta": 0.1}
    }

Alphas may be integers or exact fraction strings like ``"3/2"``.  Unknown
fields are rejected in strict mode and warned about otherwise.  Solution
files embed everything needed for independent re-verification.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping

from .errors import FormatError, ValidationError
from .model import (
    CommitteeMember,
    Instance,
    Matching,
    Ranking,
    School,
    StudentPrefs,
    validate,
)

FORMAT_VERSION = 1

_INSTANCE_KEYS = {"format", "students", "schools", "solver"}
_STUDENT_KEYS = {"id", "prefs"}
_SCHOOL_KEYS = {"id", "capacity", "committee"}
_MEMBER_KEYS = {"id", "alpha", "ranking"}
_SOLVER_KEYS = {"eps", "delta", "damping", "tol", "max_iter", "seed"}


@dataclass(frozen=True)
class SolverOverrides:
    eps: float | None = None
    delta: float | None = None
    damping: float | None = None
    tol: float | None = None
    max_iter: int | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            k: v
            for k, v in (
                ("eps", self.eps),
                ("delta", self.delta),
                ("damping", self.damping),
                ("tol", self.tol),
                ("max_iter", self.max_iter),
                ("seed", self.seed),
            )
            if v is not None
        }


def _check_keys(obj: Mapping, allowed: set[str], where: str, strict: bool) -> None:
    unknown = sorted(set(obj) - allowed)
    if not unknown:
        return
    message = f"unknown field(s) {unknown} in {where}"
    if strict:
        raise FormatError(message)
    warnings.warn(message, stacklevel=3)


def parse_alpha(value: Any) -> Fraction:
    if isinstance(value, bool):
        raise FormatError(f"alpha must be a number or fraction string, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"bad alpha {value!r}: {exc}") from None
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**9)
    raise FormatError(f"alpha must be a number or fraction string, got {value!r}")


def instance_from_dict(
    doc: Mapping, strict: bool = True
) -> tuple[Instance, SolverOverrides]:
    """Parse an instance document; validates and raises on violations."""
    if not isinstance(doc, Mapping):
        raise FormatError("instance document must be a JSON object")
    _check_keys(doc, _INSTANCE_KEYS, "instance", strict)
    if doc.get("format") != FORMAT_VERSION:
        raise FormatError(
            f"unsupported format {doc.get('format')!r}; expected {FORMAT_VERSION}"
        )
    try:
        student_docs = list(doc["students"])
        school_docs = list(doc["schools"])
    except KeyError as exc:
        raise FormatError(f"missing required field {exc}") from None

    student_index: dict[str, int] = {}
    for i, sdoc in enumerate(student_docs):
        _check_keys(sdoc, _STUDENT_KEYS, f"students[{i}]", strict)
        label = str(sdoc["id"])
        if label in student_index:
            raise FormatError(f"duplicate student id {label!r}")
        student_index[label] = i
    school_index: dict[str, int] = {}
    for h, hdoc in enumerate(school_docs):
        _check_keys(hdoc, _SCHOOL_KEYS, f"schools[{h}]", strict)
        label = str(hdoc["id"])
        if label in school_index:
            raise FormatError(f"duplicate school id {label!r}")
        school_index[label] = h

    def school_ids(labels, where):
        try:
            return tuple(school_index[str(v)] for v in labels)
        except KeyError as exc:
            raise FormatError(f"unknown school {exc} in {where}") from None

    def student_ids(labels, where):
        try:
            return tuple(student_index[str(v)] for v in labels)
        except KeyError as exc:
            raise FormatError(f"unknown student {exc} in {where}") from None

    students = tuple(
        StudentPrefs(
            id=i,
            label=str(sdoc["id"]),
            order=school_ids(sdoc.get("prefs", []), f"students[{i}].prefs"),
        )
        for i, sdoc in enumerate(student_docs)
    )
    member_id = 0
    schools = []
    for h, hdoc in enumerate(school_docs):
        committee = []
        for j, mdoc in enumerate(hdoc.get("committee", [])):
            _check_keys(mdoc, _MEMBER_KEYS, f"schools[{h}].committee[{j}]", strict)
            order = student_ids(mdoc.get("ranking", []), f"member {mdoc.get('id')}")
            committee.append(
                CommitteeMember(
                    id=member_id,
                    label=str(mdoc["id"]),
                    ranking=Ranking.from_order(order)
                    if sorted(order) == list(range(len(students)))
                    else _loose_ranking(order, len(students)),
                    alpha=parse_alpha(mdoc["alpha"]),
                )
            )
            member_id += 1
        capacity = hdoc.get("capacity")
        if not isinstance(capacity, int) or isinstance(capacity, bool):
            raise FormatError(f"capacity of school {hdoc.get('id')!r} must be an integer")
        schools.append(
            School(
                id=h,
                label=str(hdoc["id"]),
                capacity=capacity,
                committee=tuple(committee),
            )
        )

    instance = Instance(students=students, schools=tuple(schools))
    violations = validate(instance)
    if violations:
        raise ValidationError(violations)

    solver_doc = doc.get("solver", {})
    _check_keys(solver_doc, _SOLVER_KEYS, "solver", strict)
    overrides = SolverOverrides(
        eps=solver_doc.get("eps"),
        delta=solver_doc.get("delta"),
        damping=solver_doc.get("damping"),
        tol=solver_doc.get("tol"),
        max_iter=solver_doc.get("max_iter"),
        seed=solver_doc.get("seed"),
    )
    return instance, overrides


def _loose_ranking(order: tuple[int, ...], n: int) -> Ranking:
    """Build a Ranking even from a non-permutation so validate() can report it."""
    inverse = [n] * n
    for pos, student in enumerate(order):
        if 0 <= student < n and inverse[student] == n:
            inverse[student] = pos
    return Ranking(order=order, inverse=tuple(inverse))


def instance_to_dict(
    instance: Instance, overrides: SolverOverrides | None = None
) -> dict:
    doc: dict[str, Any] = {
        "format": FORMAT_VERSION,
        "students": [
            {
                "id": s.label,
                "prefs": [instance.schools[h].label for h in s.order],
            }
            for s in instance.students
        ],
        "schools": [
            {
                "id": school.label,
                "capacity": school.capacity,
                "committee": [
                    {
                        "id": member.label,
                        "alpha": int(member.alpha)
                        if member.alpha.denominator == 1
                        else str(member.alpha),
                        "ranking": [
                            instance.students[i].label for i in member.ranking.order
                        ],
                    }
                    for member in school.committee
                ],
            }
            for school in instance.schools
        ],
    }
    if overrides is not None and overrides.to_dict():
        doc["solver"] = overrides.to_dict()
    return doc


def load_instance(path: str, strict: bool = True) -> tuple[Instance, SolverOverrides]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from None
    return instance_from_dict(doc, strict=strict)


def dump_instance(
    instance: Instance, path: str, overrides: SolverOverrides | None = None
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance, overrides), fh, indent=2, sort_keys=False)
        fh.write("\n")


def instance_from_labels(
    students: Mapping[str, list[str]],
    schools: list[dict],
) -> Instance:
    """Test/fixture helper: build an instance from label-based structures.

    ``students`` maps student label to school-label preference list;
    ``schools`` entries look like
    ``{"id": "h", "capacity": 2, "committee": [{"id": "k", "alpha": 1,
    "ranking": ["a", "b"]}]}``.
    """
    doc = {
        "format": FORMAT_VERSION,
        "students": [{"id": lab, "prefs": prefs} for lab, prefs in students.items()],
        "schools": schools,
    }
    instance, _ = instance_from_dict(doc)
    return instance


def fraction_to_json(value: Fraction) -> int | str:
    return int(value) if value.denominator == 1 else str(value)


@dataclass(frozen=True)
class SolutionDoc:
    """Parsed solution file: everything needed for independent re-checking."""

    kind: str                              # "single" | "match"
    school: str | None                     # single mode
    selected: tuple[str, ...] | None       # single mode, student labels
    assignment: dict[str, str | None] | None  # match mode, by label
    betas: dict[str, int]
    alpha_prime: dict[str, Fraction]
    c_prime: dict[str, int]
    certificate: dict
    diagnostics: dict


_SOLUTION_KEYS = {
    "format",
    "kind",
    "school",
    "selected",
    "assignment",
    "betas",
    "alpha_prime",
    "c_prime",
    "certificate",
    "diagnostics",
}


def solution_from_dict(doc: Mapping, strict: bool = True) -> SolutionDoc:
    if not isinstance(doc, Mapping):
        raise FormatError("solution document must be a JSON object")
    _check_keys(doc, _SOLUTION_KEYS, "solution", strict)
    if doc.get("format") != FORMAT_VERSION:
        raise FormatError(
            f"unsupported format {doc.get('format')!r}; expected {FORMAT_VERSION}"
        )
    kind = doc.get("kind")
    if kind not in ("single", "match"):
        raise FormatError(f"unknown solution kind {kind!r}")
    try:
        betas = {str(k): int(v) for k, v in doc["betas"].items()}
        alpha_prime = {
            str(k): parse_alpha(v) for k, v in doc["alpha_prime"].items()
        }
        c_prime = {str(k): int(v) for k, v in doc["c_prime"].items()}
        certificate = dict(doc["certificate"])
    except KeyError as exc:
        raise FormatError(f"missing required field {exc}") from None
    selected = None
    assignment = None
    if kind == "single":
        if "selected" not in doc or "school" not in doc:
            raise FormatError("single solutions need 'school' and 'selected'")
        selected = tuple(str(v) for v in doc["selected"])
    else:
        if "assignment" not in doc:
            raise FormatError("match solutions need 'assignment'")
        assignment = {
            str(k): (None if v is None else str(v))
            for k, v in doc["assignment"].items()
        }
    return SolutionDoc(
        kind=kind,
        school=str(doc["school"]) if doc.get("school") is not None else None,
        selected=selected,
        assignment=assignment,
        betas=betas,
        alpha_prime=alpha_prime,
        c_prime=c_prime,
        certificate=certificate,
        diagnostics=dict(doc.get("diagnostics", {})),
    )


def load_solution(path: str, strict: bool = True) -> SolutionDoc:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from None
    return solution_from_dict(doc, strict=strict)


def matching_to_dict(instance: Instance, matching: Matching) -> dict:
    return {
        student.label: (
            None
            if matching.assignment[student.id] is None
            else instance.schools[matching.assignment[student.id]].label
        )
        for student in instance.students
    }


def matching_from_dict(instance: Instance, doc: Mapping[str, Any]) -> Matching:
    by_label = {s.label: s.id for s in instance.students}
    school_by_label = {s.label: s.id for s in instance.schools}
    assignment: list[int | None] = [None] * instance.n_students
    for label, school_label in doc.items():
        if label not in by_label:
            raise FormatError(f"matching references unknown student {label!r}")
        if school_label is None:
            continue
        if school_label not in school_by_label:
            raise FormatError(f"matching references unknown school {school_label!r}")
        assignment[by_label[label]] = school_by_label[school_label]
    return Matching(assignment=tuple(assignment))
