"""Multi-school equilibrium solver.

Extends the single-school price equilibrium to markets: students carry
personalized prices over schools, committee members over students, and
each school allocates seats to maximize the product of the student-side
price and its committee's cumulative price.  At a fixed point the school
allocations form a fractional matching whose row supports certify
per-school thresholds.

As in the single-school solver, a ladder reconstruction finishes runs the
damped iteration cannot: the averaged allocation (or averaged student
demand, its transpose twin at equilibrium) fixes the regime, allocations
are requantized over a denominator scan, and exact prices are rebuilt in
closed form on both sides of the market.  Candidates must satisfy the
coordination conditions exactly and pass the exact stability verifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._kernels import backend_name, get_backend
from .errors import NonConvergence
from .leo import (
    DEFAULT_MAX_ITER,
    DEFAULT_RESTARTS,
    DEFAULT_TOL,
    auto_gamma,
    exact_demand,
)
from .model import FractionalAssignment, Instance
from .rational import POLISH_DENOMS, POLISH_FULL_TOL, POLISH_TRIM, rationalize_assignment
from .verify import BetaWindow, check_frac_stable, frac_windows_market

_RESTART_STREAM = 5


def choose_eps_delta(instance: Instance) -> tuple[float, float]:
    """Deterministic budget window and price floor for a market.

    With M the largest committee, picks the largest dyadic eps with
    M / (1-eps)^2 - M <= 1/10 and 1 / (1-eps)^2 <= 2, and delta = 1/(10M);
    these keep the certified thresholds within the ceiling bound.
    """
    m_big = max(len(s.committee) for s in instance.schools)
    delta = Fraction(1, 10 * m_big)
    j = 1
    while j < 60:
        e = Fraction(1, 2**j)
        inv_sq = 1 / (1 - e) ** 2
        if m_big * (inv_sq - 1) <= Fraction(1, 10) and inv_sq <= 2:
            break
        j += 1
    return float(Fraction(1, 2**j)), float(delta)


def school_allocation(utilities: Sequence[float], capacity: int) -> np.ndarray:
    """Seat allocation maximizing total utility: greedy by descending
    utility, splitting the marginal mass equally among exact ties."""
    values = np.asarray(utilities, dtype=np.float64)
    if capacity > values.shape[0]:
        raise ValueError("capacity exceeds the number of students")
    return get_backend("python").greedy_fill(values, int(capacity))


@dataclass(frozen=True)
class MeoState:
    q: np.ndarray          # (n, m) student prices
    p: np.ndarray          # (K, n) member prices
    x: np.ndarray          # (n, m) student demands
    x_empty: np.ndarray    # (n,)
    y: np.ndarray          # (K, n) member demands
    y_empty: np.ndarray    # (K,)
    z: np.ndarray          # (m, n) school allocations
    eps: float
    delta: float
    gamma: float
    tol: float
    residual: float
    iterations: int
    restarts: int
    converged: bool
    seed: int
    backend: str
    method: str = "iterate"
    exact_z: FractionalAssignment | None = None
    exact_q: tuple[tuple[Fraction, ...], ...] | None = None
    exact_p: tuple[tuple[Fraction, ...], ...] | None = None
    z_avg: np.ndarray | None = None
    x_avg: np.ndarray | None = None


def _market_arrays(instance: Instance):
    n = instance.n_students
    m = instance.n_schools
    stud_pref = np.array([s.order for s in instance.students], dtype=np.int64)
    member_pref = []
    member_school = []
    offsets = []
    for school in instance.schools:
        offsets.append(len(member_pref))
        for member in school.committee:
            member_pref.append(member.ranking.order)
            member_school.append(school.id)
    return (
        stud_pref.reshape(n, m),
        np.array(member_pref, dtype=np.int64).reshape(len(member_pref), n),
        np.array(member_school, dtype=np.int64),
        np.array(offsets, dtype=np.int64),
        np.array([float(m_.alpha) for _, m_ in instance.members()]),
        np.array([s.capacity for s in instance.schools], dtype=np.int64),
    )


def _student_ladder(
    instance: Instance, z: FractionalAssignment, eps: Fraction
) -> list[list[Fraction]]:
    """Closed-form student prices making student demand equal the allocation.

    Walking down a student's school preferences, the price after absorbing
    cumulative mass c is 1 - eps * c; schools beyond the assigned mass get
    zero-width demand intervals automatically, and the leftover budget mass
    flows to the outside option.
    """
    n = instance.n_students
    m = instance.n_schools
    q: list[list[Fraction]] = []
    for student in instance.students:
        row = [Fraction(0)] * m
        cum = Fraction(0)
        for h in student.order:
            cum += z.rows[h][student.id]
            row[h] = 1 - eps * cum
        q.append(row)
    return q


def _member_ladders(
    instance: Instance, z: FractionalAssignment, eps: Fraction, delta: Fraction
) -> list[list[Fraction]]:
    prices: list[list[Fraction]] = []
    n = instance.n_students
    for school in instance.schools:
        row_z = z.rows[school.id]
        for member in school.committee:
            alpha = member.alpha
            row = [delta] * n
            if alpha > 0:
                cum = Fraction(0)
                for student in member.ranking.order:
                    cum += row_z[student]
                    if cum >= alpha:
                        if cum == alpha:
                            row[student] = 1 - eps
                        break
                    row[student] = 1 - eps * cum / alpha
            prices.append(row)
    return prices


def _ladder_market_ok(
    instance: Instance,
    z: FractionalAssignment,
    q: list[list[Fraction]],
    p: list[list[Fraction]],
    eps: Fraction,
    delta: Fraction,
):
    """Exact coordination check for a reconstructed market state.

    Student demands must reproduce the allocation exactly (condition 4 with
    zero gap); member demands must be covered with slack only at the floor
    (condition 5).  Returns (x, x_empty, y, y_empty) on success.
    """
    n = instance.n_students
    xs: list[list[Fraction]] = []
    x_empties: list[Fraction] = []
    for student in instance.students:
        x, x_empty = exact_demand(q[student.id], student.order, eps)
        for h in range(instance.n_schools):
            if x[h] != z.rows[h][student.id]:
                return None
        xs.append(x)
        x_empties.append(x_empty)
    ys: list[list[Fraction]] = []
    y_empties: list[Fraction] = []
    for school, member in instance.members():
        row = p[member.id]
        y, y_empty = exact_demand(row, member.ranking.order, eps, delta)
        row_z = z.rows[school.id]
        for i in range(n):
            covered = member.alpha * y[i]
            if covered > row_z[i]:
                return None
            if covered < row_z[i] and row[i] != delta:
                return None
        ys.append(y)
        y_empties.append(y_empty)
    return xs, x_empties, ys, y_empties


def polish_market(
    instance: Instance,
    sources: Sequence[np.ndarray],
    eps: float,
    delta: float,
) -> tuple[FractionalAssignment, list[list[Fraction]], list[list[Fraction]], tuple, list[BetaWindow]] | None:
    """Rebuild an exact market equilibrium from averaged trajectories.

    ``sources`` are (m, n) candidate allocation matrices (averaged school
    allocations, then averaged student demands transposed); each is scanned
    over quantization denominators, gated by window feasibility within the
    per-school ceilings, exact coordination, and the stability verifier.
    """
    eps_frac = Fraction(eps)
    delta_frac = Fraction(delta)
    caps = [s.capacity for s in instance.schools]
    ceilings = [
        math.ceil(s.alpha_sum() / s.capacity) for s in instance.schools
    ]
    for source in sources:
        rows = source.tolist()
        for denom in POLISH_DENOMS:
            z = rationalize_assignment(
                rows, caps, denom, POLISH_TRIM, POLISH_FULL_TOL
            )
            if z is None:
                continue
            windows = frac_windows_market(instance, z)
            if any(
                not w.feasible or w.lo > ceiling
                for w, ceiling in zip(windows, ceilings)
            ):
                continue
            q = _student_ladder(instance, z, eps_frac)
            p = _member_ladders(instance, z, eps_frac, delta_frac)
            demands_exact = _ladder_market_ok(instance, z, q, p, eps_frac, delta_frac)
            if demands_exact is None:
                continue
            if not check_frac_stable(instance, z, [w.lo for w in windows]).ok:
                continue
            return z, q, p, demands_exact, windows
    return None


def _ladder_market_state(
    instance: Instance,
    polished,
    eps: float,
    delta: float,
    gamma: float,
    tol: float,
    iterations: int,
    restarts: int,
    seed: int,
    backend: str | None,
) -> MeoState:
    z, q, p, (xs, x_empties, ys, y_empties), _ = polished
    return MeoState(
        q=np.array([[float(v) for v in row] for row in q]),
        p=np.array([[float(v) for v in row] for row in p]),
        x=np.array([[float(v) for v in row] for row in xs]),
        x_empty=np.array([float(v) for v in x_empties]),
        y=np.array([[float(v) for v in row] for row in ys]),
        y_empty=np.array([float(v) for v in y_empties]),
        z=np.array([[float(v) for v in row] for row in z.rows]),
        eps=eps,
        delta=delta,
        gamma=gamma,
        tol=tol,
        residual=0.0,
        iterations=iterations,
        restarts=restarts,
        converged=True,
        seed=seed,
        backend=backend_name(backend),
        method="ladder",
        exact_z=z,
        exact_q=tuple(tuple(row) for row in q),
        exact_p=tuple(tuple(row) for row in p),
    )


def meo_iterate(
    instance: Instance,
    *,
    eps: float | None = None,
    delta: float | None = None,
    gamma: float | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    backend: str | None = None,
) -> MeoState:
    """Damped synchronous price iteration over the whole market.

    The instance must already be padded (students >= total capacity).  The
    residual is the largest of: the gap between school allocations and
    student demands (zero at any exact fixed point of a padded market),
    uncovered scaled member demand, and member-side slack held above the
    price floor.  After each run that misses the tolerance, the exact
    ladder reconstruction is attempted before restarting with halved
    damping.
    """
    if instance.n_students < instance.total_capacity():
        raise ValueError("market must be padded before solving")
    if eps is None or delta is None:
        auto_eps, auto_delta = choose_eps_delta(instance)
        eps = auto_eps if eps is None else eps
        delta = auto_delta if delta is None else delta
    alphas_all = [m_.alpha for _, m_ in instance.members()]
    base_gamma = gamma if gamma is not None else auto_gamma(eps, alphas_all)
    kern = get_backend(backend)
    stud_pref, member_pref, member_school, offsets, alphas, caps = _market_arrays(
        instance
    )
    n, m = stud_pref.shape
    k_total = member_pref.shape[0]

    best: MeoState | None = None
    for restart in range(restarts + 1):
        g = base_gamma / 2**restart
        if restart == 0:
            q0 = np.zeros((n, m))
            p0 = np.full((k_total, n), delta)
        else:
            ss = np.random.SeedSequence([seed, _RESTART_STREAM, restart])
            rng = np.random.Generator(np.random.PCG64(ss))
            q0 = rng.uniform(0.0, 1.0 - eps, size=(n, m))
            p0 = rng.uniform(delta, 1.0 - eps, size=(k_total, n))
        q, p, x, x_empty, y, y_empty, z, residual, iters, z_avg, x_avg = kern.meo_run(
            stud_pref,
            member_pref,
            member_school,
            offsets,
            alphas,
            q0,
            p0,
            caps,
            eps,
            delta,
            g,
            tol,
            max_iter,
        )
        state = MeoState(
            q=q,
            p=p,
            x=x,
            x_empty=x_empty,
            y=y,
            y_empty=y_empty,
            z=z,
            eps=eps,
            delta=delta,
            gamma=g,
            tol=tol,
            residual=residual,
            iterations=iters,
            restarts=restart,
            converged=residual <= tol,
            seed=seed,
            backend=backend_name(backend),
            z_avg=z_avg,
            x_avg=x_avg,
        )
        if state.converged:
            return state
        polished = polish_market(
            instance, (z_avg, x_avg.T.copy()), eps, delta
        )
        if polished is not None:
            return _ladder_market_state(
                instance, polished, eps, delta, g, tol, iters, restart, seed, backend
            )
        if best is None or state.residual < best.residual:
            best = state
    return best


def utility_matrix(state: MeoState, instance: Instance) -> np.ndarray:
    """Per-(school, student) utilities: the student's price for the school
    times the committee's cumulative price for the student.

    Entries are nonnegative, and strictly positive wherever the student's
    price is (the member floor keeps cumulative prices positive).
    """
    utilities = np.zeros((instance.n_schools, instance.n_students))
    for school in instance.schools:
        member_ids = [m_.id for m_ in school.committee]
        totals = state.p[member_ids, :].sum(axis=0)
        utilities[school.id] = state.q[:, school.id] * totals
    return utilities


def extract_betas(
    state: MeoState,
    instance: Instance,
    support: Sequence[Sequence[int]] | None = None,
) -> list[int]:
    """Certified per-school thresholds from a converged state.

    For each school, the raw threshold is the smallest supported utility
    (student price times cumulative committee price); the certified integer
    threshold divides out the squared budget window.  Asserts the utility
    bound (alpha mass over capacity plus the floor contribution) and the
    ceiling bound on the result.
    """
    if not state.converged:
        raise ValueError("threshold extraction requires a converged state")
    eps = Fraction(state.eps)
    delta = Fraction(state.delta)
    betas: list[int] = []

    def price(k: int, i: int) -> Fraction:
        if state.exact_p is not None:
            return state.exact_p[k][i]
        return Fraction(float(state.p[k, i]))

    def student_price(i: int, h: int) -> Fraction:
        if state.exact_q is not None:
            return state.exact_q[i][h]
        return Fraction(float(state.q[i, h]))

    for school in instance.schools:
        h = school.id
        if support is not None:
            rows = support[h]
        elif state.exact_z is not None:
            rows = [
                i for i in range(instance.n_students)
                if state.exact_z.rows[h][i] > 0
            ]
        else:
            rows = [i for i in range(state.z.shape[1]) if state.z[h, i] > 0.0]
        member_ids = [m_.id for m_ in school.committee]
        utilities = [
            student_price(i, h)
            * sum((price(k, i) for k in member_ids), Fraction(0))
            for i in rows
        ]
        u_star = min(utilities)
        bound = school.alpha_sum() / school.capacity + delta * len(school.committee)
        assert u_star <= bound + Fraction(1, 10**6), (
            f"school {school.label}: supported utility {float(u_star):.6f} "
            f"exceeds bound {float(bound):.6f}"
        )
        beta = math.floor(u_star / (1 - eps) ** 2)
        ceiling = math.ceil(school.alpha_sum() / school.capacity)
        assert beta <= ceiling, (
            f"school {school.label}: threshold {beta} exceeds ceiling {ceiling}"
        )
        betas.append(beta)
    return betas


def require_converged(state: MeoState) -> MeoState:
    if not state.converged:
        raise NonConvergence(
            f"market iteration stalled at residual {state.residual:.3e} "
            f"after {state.restarts + 1} attempts",
            state=state,
            residual=state.residual,
        )
    return state
