"""Iterative LP rounding in exact rational arithmetic.

Fractional solutions are driven to 0/1 vectors by repeatedly taking a
vertex of a small 0/1-coefficient LP, freezing the integral coordinates,
and deleting demand constraints once few enough fractional variables
remain in them.  Deletion thresholds:

* single school: a committee-demand interval goes once at most
  2*ceil(beta) fractional variables remain (each fractional variable sits
  in at most beta such intervals, so the final drift stays within 2*beta);
* matching: a school-capacity equality goes at 2|K_h|+1 remaining
  variables and a committee interval at 2|K_h|+2, giving capacity drift at
  most 2|K_h|+1 and per-member drift at most 2|K_h|+2.

Everything here is exact; no tolerance parameter exists in this module.
If a pass stalls (no integral coordinate and nothing deletable) the engine
raises with the live system rather than loosening silently; a bound miss
triggers exactly one fallback pass with thresholds raised by one and is a
hard error after that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import BoundViolation, Infeasible, RoundingStalled
from .model import FractionalAssignment, Instance, Matching, Number, School
from .support import all_upper_sets


@dataclass
class LinearRow:
    """One 0/1-coefficient constraint: lo <= sum over vars <= hi."""

    vars: set[int]
    lo: Fraction
    hi: Fraction
    kind: str          # "capacity" | "student" | "student-cap" | "committee"
    key: str           # label of the owning school / member / student
    delete_at: int | None  # None: never deletable


@dataclass
class LPSystem:
    n_vars: int
    rows: list[LinearRow]
    witness: list[Fraction]


def lp_vertex(system: LPSystem, start: Sequence[Fraction] | None = None) -> list[Fraction]:
    """A basic feasible solution of ``system``, found by vertex pursuit.

    Starting from the feasible witness, repeatedly move along a direction in
    the null space of all tight rows (choosing the smallest-index free
    variable, exactly) until the tight system reaches full rank.  Already
    tight rows and bounds stay tight, so at most #fractional coordinates
    remain off 0/1 bounds: an integral start returns unchanged.
    """
    x = [Fraction(v) for v in (start if start is not None else system.witness)]
    if len(x) != system.n_vars:
        raise Infeasible("start point has the wrong dimension")
    for v in x:
        if not (0 <= v <= 1):
            raise Infeasible("start point violates variable bounds")
    for row in system.rows:
        total = sum(x[j] for j in row.vars)
        if not (row.lo <= total <= row.hi):
            raise Infeasible(
                f"start point violates {row.kind} row {row.key}: "
                f"{row.lo} <= {total} <= {row.hi}"
            )

    guard = system.n_vars + len(system.rows) + 5
    for _ in range(guard):
        direction = _null_direction(system, x)
        if direction is None:
            return x
        theta = _max_step(system, x, direction)
        assert theta > 0, "degenerate pursuit step"
        x = [xi + theta * di for xi, di in zip(x, direction)]
    raise Infeasible("vertex pursuit failed to terminate")  # internal bug


def _null_direction(system: LPSystem, x: list[Fraction]) -> list[Fraction] | None:
    active = [j for j in range(system.n_vars) if 0 < x[j] < 1]
    if not active:
        return None
    col_of = {j: c for c, j in enumerate(active)}
    width = len(active)

    tight_rows: list[list[Fraction]] = []
    for row in system.rows:
        total = sum(x[j] for j in row.vars)
        if total == row.lo or total == row.hi:
            dense = [Fraction(0)] * width
            nonzero = False
            for j in row.vars:
                if j in col_of:
                    dense[col_of[j]] = Fraction(1)
                    nonzero = True
            if nonzero:
                tight_rows.append(dense)

    pivots: list[tuple[int, list[Fraction]]] = []  # (pivot col, reduced row)
    for dense in tight_rows:
        r = dense[:]
        for col, prow in pivots:
            if r[col] != 0:
                factor = r[col]
                r = [a - factor * b for a, b in zip(r, prow)]
        for col in range(width):
            if r[col] != 0:
                inv = r[col]
                r = [a / inv for a in r]
                pivots.append((col, r))
                break
    pivot_cols = {col for col, _ in pivots}
    free = [c for c in range(width) if c not in pivot_cols]
    if not free:
        return None

    d_active = [Fraction(0)] * width
    d_active[free[0]] = Fraction(1)
    for col, prow in reversed(pivots):
        acc = Fraction(0)
        for c in range(width):
            if c != col and prow[c] != 0:
                acc += prow[c] * d_active[c]
        d_active[col] = -acc

    d = [Fraction(0)] * system.n_vars
    for j, c in col_of.items():
        d[j] = d_active[c]
    return d


def _max_step(system: LPSystem, x: list[Fraction], d: list[Fraction]) -> Fraction:
    theta: Fraction | None = None

    def cap(value: Fraction):
        nonlocal theta
        if theta is None or value < theta:
            theta = value

    for j in range(system.n_vars):
        if d[j] > 0:
            cap((1 - x[j]) / d[j])
        elif d[j] < 0:
            cap(x[j] / -d[j])
    for row in system.rows:
        total = sum(x[j] for j in row.vars)
        slope = sum(d[j] for j in row.vars)
        if slope > 0:
            cap((row.hi - total) / slope)
        elif slope < 0:
            cap((total - row.lo) / -slope)
    assert theta is not None, "unbounded pursuit direction in a box polytope"
    return theta


@dataclass(frozen=True)
class RoundingResult:
    values: FractionalAssignment        # integral entries
    matching: Matching | None
    alpha_prime: dict[str, Fraction]    # member label -> adjusted parameter
    c_prime: dict[str, int]             # school label -> adjusted capacity
    deletions: tuple[dict, ...]


@dataclass
class _Job:
    """Mutable state of one rounding pass over the fractional coordinates."""

    system: LPSystem
    point: list[Fraction]
    values: dict[int, Fraction]         # var -> fixed integral value
    deletions: list[dict] = field(default_factory=list)

    def active_vars(self) -> list[int]:
        return [j for j in range(self.system.n_vars) if j not in self.values]

    def fix_integrals(self, x: list[Fraction]) -> bool:
        fixed_any = False
        for j in self.active_vars():
            if x[j] == 0 or x[j] == 1:
                self.values[j] = x[j]
                fixed_any = True
                for row in self.system.rows:
                    if j in row.vars:
                        row.vars.discard(j)
                        row.lo -= x[j]
                        row.hi -= x[j]
        self.point = x
        return fixed_any

    def delete_rows(self) -> bool:
        kept, deleted = [], False
        for row in self.system.rows:
            if not row.vars:
                deleted = True
                continue
            if row.delete_at is not None and len(row.vars) <= row.delete_at:
                self.deletions.append(
                    {
                        "kind": row.kind,
                        "key": row.key,
                        "remaining_vars": len(row.vars),
                        "threshold": row.delete_at,
                    }
                )
                deleted = True
                continue
            kept.append(row)
        self.system.rows = kept
        return deleted

    def run(self) -> None:
        while True:
            remaining = self.active_vars()
            if not remaining:
                return
            x = lp_vertex(self.system, self.point)
            progressed = self.fix_integrals(x)
            if not self.active_vars():
                return
            deleted = self.delete_rows()
            if not progressed and not deleted:
                raise RoundingStalled(
                    "no integral coordinate and no deletable constraint",
                    basis=self.system,
                )


def _committee_interval(values: Sequence[Fraction], members_set, frac_index) -> tuple:
    """Interval [floor, ceil] of the mass on one upper set, split into the
    fixed integral part and the fractional variable list."""
    total = sum(values[i] for i in members_set)
    fixed = sum(values[i] for i in members_set if i not in frac_index)
    var_ids = [frac_index[i] for i in members_set if i in frac_index]
    lo = Fraction(math.floor(total)) - fixed
    hi = Fraction(math.ceil(total)) - fixed
    return var_ids, lo, hi


def round_single(
    z: Sequence[Number], school: School, beta: Number
) -> RoundingResult:
    """Round an acceptable fractional set to a 0/1 selection.

    Committee-demand intervals are placed on the strict upper sets of the
    input; already-integral entries never change.  Asserts the drift bound
    |alpha' - alpha| <= 2*beta for every member (one fallback pass with the
    deletion threshold raised by one, then a hard error).
    """
    values = [Fraction(v) for v in z]
    if sum(values) != school.capacity:
        raise Infeasible("input mass does not equal the capacity")
    threshold = 2 * math.ceil(beta)
    last_error: Exception | None = None
    for attempt, thresh in enumerate((threshold, threshold + 1)):
        try:
            z_prime, deletions = _round_single_pass(values, school, thresh)
        except RoundingStalled as exc:
            last_error = exc
            if attempt == 1:
                raise
            continue
        alpha_prime = _adjusted_alphas_single(values, z_prime, school)
        drift_ok = all(
            abs(alpha_prime[m.label] - m.alpha) <= 2 * beta
            for m in school.committee
        )
        if drift_ok and sum(z_prime) == school.capacity:
            return RoundingResult(
                values=FractionalAssignment(rows=(tuple(z_prime),)),
                matching=None,
                alpha_prime=alpha_prime,
                c_prime={school.label: school.capacity},
                deletions=tuple(deletions),
            )
        last_error = BoundViolation(
            f"adjusted parameters drifted beyond 2*beta at threshold {thresh}"
        )
    raise last_error


def _round_single_pass(
    values: list[Fraction], school: School, threshold: int
) -> tuple[list[Fraction], list[dict]]:
    n = len(values)
    frac = [i for i in range(n) if 0 < values[i] < 1]
    frac_index = {i: v for v, i in enumerate(frac)}
    ones = sum(1 for i in range(n) if values[i] == 1)

    rows = [
        LinearRow(
            vars=set(range(len(frac))),
            lo=Fraction(school.capacity - ones),
            hi=Fraction(school.capacity - ones),
            kind="capacity",
            key=school.label,
            delete_at=None,
        )
    ]
    usets = all_upper_sets(school, values)
    for member, sets in zip(school.committee, usets):
        var_ids, lo, hi = _committee_interval(values, sets.strong, frac_index)
        if var_ids:
            rows.append(
                LinearRow(
                    vars=set(var_ids),
                    lo=max(lo, Fraction(0)),
                    hi=min(hi, Fraction(len(var_ids))),
                    kind="committee",
                    key=member.label,
                    delete_at=threshold,
                )
            )

    job = _Job(
        system=LPSystem(
            n_vars=len(frac), rows=rows, witness=[values[i] for i in frac]
        ),
        point=[values[i] for i in frac],
        values={},
    )
    job.run()

    out = list(values)
    for i, var in frac_index.items():
        out[i] = job.values[var]
    return out, job.deletions


def _adjusted_alphas_single(
    z: Sequence[Fraction], z_prime: Sequence[Fraction], school: School
) -> dict[str, Fraction]:
    """Recompute adjusted parameters from scratch: mass of the rounded vector
    on each member's weak upper set of the original input."""
    adjusted = {}
    for member, sets in zip(school.committee, all_upper_sets(school, z)):
        adjusted[member.label] = sum(
            (z_prime[i] for i in sets.weak), Fraction(0)
        )
    return adjusted


def adjusted_params(
    z: FractionalAssignment,
    z_prime: FractionalAssignment,
    instance: Instance,
) -> tuple[dict[str, Fraction], dict[str, int]]:
    """Independent recomputation of (alpha', c') used to cross-check the
    rounding loop's bookkeeping."""
    alpha_prime: dict[str, Fraction] = {}
    c_prime: dict[str, int] = {}
    for school in instance.schools:
        row = z.row(school.id)
        row_prime = z_prime.row(school.id)
        for member, sets in zip(school.committee, all_upper_sets(school, row)):
            alpha_prime[member.label] = sum(
                (row_prime[i] for i in sets.weak), Fraction(0)
            )
        c_prime[school.label] = int(sum(row_prime))
    return alpha_prime, c_prime


def round_matching(z: FractionalAssignment, instance: Instance) -> RoundingResult:
    """Round a stable fractional matching to an integral matching.

    Fully-assigned students stay assigned (their demand rows are
    equalities), partially-assigned students keep total mass at most one,
    and capacity/committee drift stays within 2|K_h|+1 / 2|K_h|+2 (one
    fallback pass with thresholds raised by one, then a hard error).
    """
    m = instance.n_schools
    values = [[Fraction(v) for v in z.row(h)] for h in range(m)]
    last_error: Exception | None = None
    for attempt, bump in enumerate((0, 1)):
        try:
            z_prime, deletions = _round_matching_pass(values, instance, bump)
        except RoundingStalled as exc:
            last_error = exc
            if attempt == 1:
                raise
            continue
        result = _package_matching(values, z_prime, instance, deletions)
        if result is not None:
            return result
        last_error = BoundViolation(
            f"adjusted parameters drifted beyond the rounding bounds (bump={bump})"
        )
    raise last_error


def _round_matching_pass(
    values: list[list[Fraction]], instance: Instance, bump: int
) -> tuple[list[list[Fraction]], list[dict]]:
    m = instance.n_schools
    n = instance.n_students
    frac = [(h, i) for h in range(m) for i in range(n) if 0 < values[h][i] < 1]
    frac_index = {pair: v for v, pair in enumerate(frac)}

    rows: list[LinearRow] = []
    for school in instance.schools:
        h = school.id
        ones = sum(1 for i in range(n) if values[h][i] == 1)
        var_ids = {frac_index[(h, i)] for i in range(n) if (h, i) in frac_index}
        if var_ids:
            rows.append(
                LinearRow(
                    vars=var_ids,
                    lo=Fraction(school.capacity - ones),
                    hi=Fraction(school.capacity - ones),
                    kind="capacity",
                    key=school.label,
                    delete_at=2 * len(school.committee) + 1 + bump,
                )
            )
    for i in range(n):
        total = sum(values[h][i] for h in range(m))
        var_ids = {frac_index[(h, i)] for h in range(m) if (h, i) in frac_index}
        if total == 1 and var_ids:
            rows.append(
                LinearRow(
                    vars=var_ids,
                    lo=Fraction(1),
                    hi=Fraction(1),
                    kind="student",
                    key=instance.students[i].label,
                    delete_at=None,
                )
            )
        elif total < 1 and len(var_ids) >= 2:
            # Keeps partially assigned students single-homed in the output;
            # never tight from below, so the progress argument is unchanged.
            rows.append(
                LinearRow(
                    vars=var_ids,
                    lo=Fraction(0),
                    hi=Fraction(1),
                    kind="student-cap",
                    key=instance.students[i].label,
                    delete_at=None,
                )
            )
    for school in instance.schools:
        h = school.id
        usets = all_upper_sets(school, values[h])
        for member, sets in zip(school.committee, usets):
            row_frac_index = {
                i: frac_index[(h, i)] for i in range(n) if (h, i) in frac_index
            }
            var_ids, lo, hi = _committee_interval(
                values[h], sets.weak, row_frac_index
            )
            if var_ids:
                rows.append(
                    LinearRow(
                        vars=set(var_ids),
                        lo=max(lo, Fraction(0)),
                        hi=min(hi, Fraction(len(var_ids))),
                        kind="committee",
                        key=member.label,
                        delete_at=2 * len(school.committee) + 2 + bump,
                    )
                )

    witness = [values[h][i] for h, i in frac]
    job = _Job(
        system=LPSystem(n_vars=len(frac), rows=rows, witness=witness),
        point=list(witness),
        values={},
    )
    job.run()

    out = [list(row) for row in values]
    for (h, i), var in frac_index.items():
        out[h][i] = job.values[var]
    return out, job.deletions


def _package_matching(
    values: list[list[Fraction]],
    z_prime: list[list[Fraction]],
    instance: Instance,
    deletions: list[dict],
) -> RoundingResult | None:
    m = instance.n_schools
    n = instance.n_students
    rounded = FractionalAssignment(rows=tuple(tuple(r) for r in z_prime))
    original = FractionalAssignment(rows=tuple(tuple(r) for r in values))

    assignment: list[int | None] = [None] * n
    for i in range(n):
        homes = [h for h in range(m) if z_prime[h][i] == 1]
        if len(homes) > 1:
            raise BoundViolation(f"student {i} rounded into {len(homes)} schools")
        if homes:
            assignment[i] = homes[0]
        total = sum(values[h][i] for h in range(m))
        if total == 1 and not homes:
            raise BoundViolation(f"fully assigned student {i} lost their seat")
    for h in range(m):
        for i in range(n):
            if values[h][i] in (0, 1) and z_prime[h][i] != values[h][i]:
                raise BoundViolation("an integral entry changed during rounding")

    alpha_prime, c_prime = adjusted_params(original, rounded, instance)
    for school in instance.schools:
        k = len(school.committee)
        if abs(c_prime[school.label] - school.capacity) > 2 * k + 1:
            return None
        for member in school.committee:
            if abs(alpha_prime[member.label] - member.alpha) > 2 * k + 2:
                return None
    return RoundingResult(
        values=rounded,
        matching=Matching(assignment=tuple(assignment)),
        alpha_prime=alpha_prime,
        c_prime=c_prime,
        deletions=tuple(deletions),
    )
