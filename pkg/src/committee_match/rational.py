"""Float-to-rational handoff between the equilibrium solvers and rounding.

Equilibrium states are floating point; the rounding engine is exact.  Each
allocation entry is snapped to a rational grid (2**-40 by default; the
polish path scans coarser denominators), near-bound values inside ``trim``
are clamped to the bound first, and mass totals are then repaired in whole
grid quanta: row sums exactly to each capacity, and in matching mode
fully-assigned students' column sums exactly to one while partially
assigned columns stay strictly below one.  The snapped object is
re-verified before rounding ever sees it.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .errors import HandoffError
from .model import FractionalAssignment

GRID_BITS = 40
GRID_DENOM = 2**GRID_BITS
DUST = 1e-9
FULL_COLUMN_TOL = 1e-6


def _snap_value(v: float, denom: int, trim: float) -> Fraction:
    x = float(v)
    if x < trim:
        return Fraction(0)
    if x > 1.0 - trim:
        return Fraction(1)
    return Fraction(round(x * denom), denom)


def _shift_units(
    vals: list[Fraction],
    units: int,
    quantum: Fraction,
    *,
    allowed: Sequence[int] | None = None,
    room: dict[int, Fraction] | None = None,
) -> int:
    """Move ``units`` grid quanta into (positive) or out of (negative) ``vals``.

    Additions go to the largest entries first, removals come from the
    smallest positive entries; ``room`` caps how much an index may absorb.
    Returns the units left over when capacity runs out.
    """
    idx = list(allowed) if allowed is not None else list(range(len(vals)))
    while units != 0:
        progressed = False
        if units > 0:
            for i in sorted(idx, key=lambda i: (-vals[i], i)):
                head = 1 - vals[i]
                if room is not None:
                    head = min(head, room.get(i, head))
                take = min(units, int(head / quantum))
                if take > 0:
                    vals[i] += take * quantum
                    if room is not None and i in room:
                        room[i] -= take * quantum
                    units -= take
                    progressed = True
                if units == 0:
                    break
        else:
            for i in sorted(idx, key=lambda i: (vals[i], i)):
                give = min(-units, int(vals[i] / quantum))
                if give > 0:
                    vals[i] -= give * quantum
                    if room is not None and i in room:
                        room[i] += give * quantum
                    units += give
                    progressed = True
                if units == 0:
                    break
        if not progressed:
            break
    return units


def rationalize_row(
    row: Sequence[float],
    capacity: int,
    denom: int = GRID_DENOM,
    trim: float = DUST,
) -> list[Fraction] | None:
    """Quantize one allocation row and repair its total onto the capacity.

    Returns None when the repair cannot be completed (no room left)."""
    quantum = Fraction(1, denom)
    vals = [_snap_value(v, denom, trim) for v in row]
    deficit = Fraction(capacity) - sum(vals)
    units = deficit / quantum
    if units.denominator != 1:
        return None
    left = _shift_units(vals, int(units), quantum)
    if left != 0:
        return None
    return vals


def snap_row(row: Sequence[float], capacity: int) -> list[Fraction]:
    """Strict variant of ``rationalize_row`` at the fine grid; raises on failure."""
    vals = rationalize_row(row, capacity)
    if vals is None:
        raise HandoffError("could not repair the snapped row mass")
    return vals


def rationalize_assignment(
    rows: Sequence[Sequence[float]],
    capacities: Sequence[int],
    denom: int = GRID_DENOM,
    trim: float = DUST,
    full_tol: float = FULL_COLUMN_TOL,
) -> FractionalAssignment | None:
    """Quantize a multi-school allocation, repairing rows and columns.

    A student counts as fully assigned when the source column sum is within
    ``full_tol`` of one (or above); their snapped column is repaired to
    exactly one.  Other columns are kept strictly below one so the exact
    full/partial classification downstream matches this one.
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    quantum = Fraction(1, denom)
    snapped = [[_snap_value(v, denom, trim) for v in row] for row in rows]

    float_cols = [sum(float(rows[h][i]) for h in range(m)) for i in range(n)]
    full = [c >= 1.0 - full_tol for c in float_cols]

    for i in range(n):
        col = [snapped[h][i] for h in range(m)]
        target = Fraction(1) if full[i] else min(sum(col), 1 - quantum)
        units = (target - sum(col)) / quantum
        if units.denominator != 1:
            return None
        if _shift_units(col, int(units), quantum) != 0:
            return None
        for h in range(m):
            snapped[h][i] = col[h]

    # Row repair: spend partial students' slack first, then shuttle quanta
    # between rows through a shared student so repaired columns stay exact.
    col_sum = [sum(snapped[h][i] for h in range(m)) for i in range(n)]
    partial_room = {
        i: (1 - quantum) - col_sum[i] for i in range(n) if not full[i]
    }

    def row_error(h: int) -> int:
        return int((Fraction(capacities[h]) - sum(snapped[h])) / quantum)

    for h in range(m):
        err = row_error(h)
        if err == 0:
            continue
        partials = [i for i in range(n) if not full[i]]
        room = dict(partial_room)
        left = _shift_units(snapped[h], err, quantum, allowed=partials, room=room)
        partial_room = {i: room.get(i, partial_room[i]) for i in partial_room}
        if left != 0:
            left = _shuttle(snapped, capacities, h, left, quantum)
        if left != 0:
            return None

    for h in range(m):
        if sum(snapped[h]) != capacities[h]:
            return None
    for i in range(n):
        total = sum(snapped[h][i] for h in range(m))
        if full[i] and total != 1:
            return None
        if not full[i] and total >= 1:
            return None
    return FractionalAssignment(rows=tuple(tuple(r) for r in snapped))


def snap_assignment(
    rows: Sequence[Sequence[float]],
    capacities: Sequence[int],
) -> FractionalAssignment:
    """Strict variant of ``rationalize_assignment`` at the fine grid."""
    out = rationalize_assignment(rows, capacities)
    if out is None:
        raise HandoffError("could not repair the snapped assignment masses")
    return out


def _shuttle(snapped, capacities, h: int, units: int, quantum: Fraction) -> int:
    """Move quanta between row ``h`` and rows with opposite error through a
    shared student, leaving every column sum unchanged."""
    m = len(snapped)
    n = len(snapped[0])
    guard = 0
    while units != 0 and guard < 10_000:
        guard += 1
        moved = False
        for h2 in range(m):
            if h2 == h:
                continue
            err2 = int((Fraction(capacities[h2]) - sum(snapped[h2])) / quantum)
            if units > 0 and err2 < 0:
                for i in range(n):
                    if snapped[h2][i] > 0 and snapped[h][i] < 1:
                        q = min(
                            units,
                            -err2,
                            int(snapped[h2][i] / quantum),
                            int((1 - snapped[h][i]) / quantum),
                        )
                        if q > 0:
                            snapped[h2][i] -= q * quantum
                            snapped[h][i] += q * quantum
                            units -= q
                            moved = True
                            break
            elif units < 0 and err2 > 0:
                for i in range(n):
                    if snapped[h][i] > 0 and snapped[h2][i] < 1:
                        q = min(
                            -units,
                            err2,
                            int(snapped[h][i] / quantum),
                            int((1 - snapped[h2][i]) / quantum),
                        )
                        if q > 0:
                            snapped[h][i] -= q * quantum
                            snapped[h2][i] += q * quantum
                            units += q
                            moved = True
                            break
            if units == 0:
                break
        if not moved:
            break
    return units


# Denominators scanned by the equilibrium polish, coarse to fine.  Small
# denominators recover the clean shares (1/2, 1/3, ...) that the averaged
# trajectory approximates; the fine grid is the faithful fallback.
POLISH_DENOMS: tuple[int, ...] = tuple(range(2, 49)) + (60, 96, 120, GRID_DENOM)
POLISH_TRIM = 0.02
POLISH_FULL_TOL = 0.04
