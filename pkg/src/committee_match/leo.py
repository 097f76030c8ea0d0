"""Single-school equilibrium solver.

Computes an approximate personalized-price equilibrium under uniform
random budgets on [1-eps, 1]: each committee member's random demand must be
covered by the central allocation (scaled by their rank parameter), with
slack allowed only at zero price.

Two routes reach a certified state:

* plain damped synchronous price iteration, when it drives the residual
  under tolerance directly;
* a ladder reconstruction ("polish") when the allocation keeps flipping
  between near-tied winners: the time-averaged allocation pins down the
  equilibrium regime, its entries are requantized over a scan of coarse
  denominators, and exact rational prices are rebuilt in closed form
  (price steps follow the cumulative allocation mass down each member's
  ranking).  The reconstruction is accepted only if the coordination
  conditions hold exactly and the exact verifier approves the resulting
  fractional set, so a wrong regime guess can never be reported as success.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._kernels import backend_name, get_backend
from .errors import NonConvergence
from .model import Number, Ranking, School
from .rational import POLISH_DENOMS, POLISH_TRIM, rationalize_row
from .verify import BetaWindow, check_frac_acceptable, frac_window_single

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 50_000
DEFAULT_RESTARTS = 3
DEFAULT_GAMMA_CAP = 0.25

_RESTART_STREAM = 4


def random_demand(
    prices: Sequence[float],
    ranking: Ranking,
    eps: float,
    empty_price: float = 0.0,
) -> tuple[np.ndarray, float]:
    """Closed-form demand distribution for one agent.

    With the budget uniform on [1-eps, 1], item i receives the probability
    that i is affordable while every strictly preferred item is not.
    Returns (per-item mass, mass on the outside option); the two sum to 1.
    """
    p = np.asarray(prices, dtype=np.float64)[None, :]
    pref = np.asarray(ranking.order, dtype=np.int64)[None, :]
    backend = get_backend("python")
    y, y_empty = backend.demands(p, pref, float(eps), float(empty_price))
    return y[0], float(y_empty[0])


def exact_demand(
    prices: Sequence[Fraction],
    order: Sequence[int],
    eps: Fraction,
    empty_price: Fraction = Fraction(0),
) -> tuple[list[Fraction], Fraction]:
    """Rational-arithmetic twin of ``random_demand`` (used by the polish)."""
    low = 1 - eps
    y = [Fraction(0)] * len(prices)
    ceiling: Fraction | None = None
    for item in order:
        price = prices[item]
        hi = Fraction(1) if ceiling is None else min(ceiling, Fraction(1))
        lo = max(price, low)
        y[item] = max(Fraction(0), hi - lo) / eps
        ceiling = price if ceiling is None else min(ceiling, price)
    hi = Fraction(1) if ceiling is None else min(ceiling, Fraction(1))
    y_empty = max(Fraction(0), hi - max(empty_price, low)) / eps
    return y, y_empty


def central_allocation(totals: Sequence[float], capacity: int) -> np.ndarray:
    """Revenue-maximizing allocation: greedy by descending total price with
    the marginal mass split equally among candidates tied at the cutoff."""
    values = np.asarray(totals, dtype=np.float64)
    if capacity > values.shape[0]:
        raise ValueError("capacity exceeds the number of candidates")
    return get_backend("python").greedy_fill(values, int(capacity))


def choose_eps(school: School) -> float:
    """Largest dyadic budget-window width keeping the threshold extraction
    floor-stable: eps * (alpha_sum / capacity + 1) < 1."""
    bound = school.alpha_sum() / school.capacity
    j = 1
    while Fraction(1, 2**j) * (bound + 1) >= 1 and j < 60:
        j += 1
    return float(Fraction(1, 2**j))


def auto_gamma(eps: float, alphas: Sequence[Number]) -> float:
    """Damping that keeps the price update a local contraction.

    Demand mass reacts to a price at rate 1/eps, so a step of gamma moves
    the excess-demand feedback by roughly gamma * alpha / eps; keeping that
    at one half avoids the overshoot oscillation seen at fixed damping.
    """
    alpha_max = max((float(a) for a in alphas), default=1.0)
    return min(DEFAULT_GAMMA_CAP, eps / (2.0 * max(alpha_max, 1.0)))


@dataclass(frozen=True)
class LeoState:
    """One solver outcome: prices, demands, allocation and diagnostics.

    ``method`` is "iterate" when the damped iteration met the tolerance on
    its own and "ladder" when the exact reconstruction finished the job; in
    the latter case ``exact_z``/``exact_p`` carry the rational state and
    the float arrays are their rounded mirrors.
    """

    p: np.ndarray
    y: np.ndarray
    y_empty: np.ndarray
    z: np.ndarray
    eps: float
    gamma: float
    tol: float
    residual: float
    iterations: int
    restarts: int
    converged: bool
    seed: int
    backend: str
    method: str = "iterate"
    exact_z: tuple[Fraction, ...] | None = None
    exact_p: tuple[tuple[Fraction, ...], ...] | None = None
    z_avg: np.ndarray | None = None


def _pref_matrix(school: School, n_students: int) -> np.ndarray:
    return np.array(
        [m.ranking.order for m in school.committee], dtype=np.int64
    ).reshape(len(school.committee), n_students)


def _restart_prices(seed: int, restart: int, shape: tuple[int, int], eps: float):
    if restart == 0:
        return np.zeros(shape)
    ss = np.random.SeedSequence([seed, _RESTART_STREAM, restart])
    rng = np.random.Generator(np.random.PCG64(ss))
    return rng.uniform(0.0, 1.0 - eps, size=shape)


def ladder_prices(
    school: School, z: Sequence[Fraction], eps: Fraction
) -> list[list[Fraction]]:
    """Closed-form equilibrium prices for an exact allocation.

    Walking down a member's ranking, each student strictly above the rank
    benchmark is priced so the member's demand interval has width z_i /
    alpha; the benchmark keeps its ladder price exactly when the cumulative
    mass lands on alpha (demand equality) and drops to the floor otherwise
    (slack is then legal); everyone below is at the floor.
    """
    n = len(z)
    prices: list[list[Fraction]] = []
    for member in school.committee:
        alpha = member.alpha
        row = [Fraction(0)] * n
        if alpha > 0:
            cum = Fraction(0)
            crossed = False
            for student in member.ranking.order:
                if crossed:
                    break
                cum += z[student]
                if cum >= alpha:
                    crossed = True
                    if cum == alpha:
                        row[student] = 1 - eps
                else:
                    row[student] = 1 - eps * cum / alpha
        prices.append(row)
    return prices


def _ladder_conditions_hold(
    school: School,
    z: Sequence[Fraction],
    prices: Sequence[Sequence[Fraction]],
    eps: Fraction,
) -> tuple[list[list[Fraction]], list[Fraction]] | None:
    """Exact coordination check: covered scaled demand, slack only at the
    floor.  Returns the exact demands when every condition holds."""
    ys: list[list[Fraction]] = []
    y_empties: list[Fraction] = []
    for member, row in zip(school.committee, prices):
        y, y_empty = exact_demand(row, member.ranking.order, eps)
        for i in range(len(z)):
            covered = member.alpha * y[i]
            if covered > z[i]:
                return None
            if covered < z[i] and row[i] != 0:
                return None
        ys.append(y)
        y_empties.append(y_empty)
    return ys, y_empties


def polish_single(
    school: School, z_avg: np.ndarray, eps: float
) -> tuple[list[Fraction], list[list[Fraction]], list[list[Fraction]], list[Fraction], BetaWindow] | None:
    """Rebuild an exact equilibrium state from the averaged allocation.

    Scans quantization denominators coarse to fine; a candidate is accepted
    only when its support window is feasible within the ceiling bound, the
    ladder state satisfies the coordination conditions exactly, and the
    exact fractional-set verifier passes at the window's lower end.
    """
    eps_frac = Fraction(eps)
    ceiling = math.ceil(school.alpha_sum() / school.capacity)
    for denom in POLISH_DENOMS:
        z = rationalize_row(z_avg.tolist(), school.capacity, denom, POLISH_TRIM)
        if z is None:
            continue
        window = frac_window_single(school, z)
        if not window.feasible or window.lo > ceiling:
            continue
        prices = ladder_prices(school, z, eps_frac)
        demands_exact = _ladder_conditions_hold(school, z, prices, eps_frac)
        if demands_exact is None:
            continue
        if not check_frac_acceptable(school, z, window.lo).ok:
            continue
        ys, y_empties = demands_exact
        return z, prices, ys, y_empties, window
    return None


def _ladder_state(
    school: School,
    polished,
    eps: float,
    gamma: float,
    tol: float,
    iterations: int,
    restarts: int,
    seed: int,
    backend: str | None,
) -> LeoState:
    z, prices, ys, y_empties, _ = polished
    return LeoState(
        p=np.array([[float(v) for v in row] for row in prices]),
        y=np.array([[float(v) for v in row] for row in ys]),
        y_empty=np.array([float(v) for v in y_empties]),
        z=np.array([float(v) for v in z]),
        eps=eps,
        gamma=gamma,
        tol=tol,
        residual=0.0,
        iterations=iterations,
        restarts=restarts,
        converged=True,
        seed=seed,
        backend=backend_name(backend),
        method="ladder",
        exact_z=tuple(z),
        exact_p=tuple(tuple(row) for row in prices),
    )


def leo_iterate(
    school: School,
    n_students: int,
    *,
    eps: float | None = None,
    gamma: float | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    backend: str | None = None,
) -> LeoState:
    """Run the damped price iteration, restarting with halved damping.

    Returns the first state whose residual (largest coordination violation:
    uncovered scaled demand, or slack held at positive price) is within
    ``tol``, trying the exact ladder reconstruction after each run that
    fails on its own; after exhausting restarts, returns the best state
    flagged unconverged.  Identical arguments give bitwise-identical
    trajectories for a given backend.
    """
    if eps is None:
        eps = choose_eps(school)
    base_gamma = gamma if gamma is not None else auto_gamma(eps, school.alphas())
    kern = get_backend(backend)
    pref = _pref_matrix(school, n_students)
    alphas = np.array([float(m.alpha) for m in school.committee])
    shape = (len(school.committee), n_students)

    best: LeoState | None = None
    for restart in range(restarts + 1):
        g = base_gamma / 2**restart
        p0 = _restart_prices(seed, restart, shape, eps)
        p, y, y_empty, z, residual, iters, z_avg = kern.leo_run(
            pref, alphas, p0, school.capacity, eps, g, tol, max_iter
        )
        state = LeoState(
            p=p,
            y=y,
            y_empty=y_empty,
            z=z,
            eps=eps,
            gamma=g,
            tol=tol,
            residual=residual,
            iterations=iters,
            restarts=restart,
            converged=residual <= tol,
            seed=seed,
            backend=backend_name(backend),
            z_avg=z_avg,
        )
        if state.converged:
            return state
        polished = polish_single(school, z_avg, eps)
        if polished is not None:
            return _ladder_state(
                school, polished, eps, g, tol, iters, restart, seed, backend
            )
        if best is None or state.residual < best.residual:
            best = state
    return best


def certified_beta(
    supported_totals: Sequence[Fraction], eps: float, school: School
) -> tuple[Fraction, int]:
    """Integer threshold from the cumulative prices on the support.

    The raw threshold is the smallest supported cumulative price (asserted
    against the alpha-mass revenue bound); the certified value divides out
    the budget window and floors, all in exact arithmetic.
    """
    raw = min(supported_totals)
    bound = school.alpha_sum() / school.capacity
    assert raw <= bound + Fraction(1, 10**6), (
        f"raw threshold {float(raw):.6f} exceeds alpha mass bound {float(bound):.6f}"
    )
    return raw, math.floor(raw / (1 - Fraction(eps)))


def state_price_totals(state: LeoState, support: Sequence[int]) -> list[Fraction]:
    """Exact cumulative prices per supported student (floats are exact
    rationals, so no precision is lost)."""
    if state.exact_p is not None:
        return [
            sum((state.exact_p[k][i] for k in range(len(state.exact_p))), Fraction(0))
            for i in support
        ]
    return [
        sum((Fraction(float(state.p[k, i])) for k in range(state.p.shape[0])),
            Fraction(0))
        for i in support
    ]


def extract_beta(state: LeoState, school: School) -> int:
    """Certified integer threshold from a converged state.

    Floor of (minimum supported cumulative price) / (1 - eps); asserts the
    revenue bound on the raw minimum.
    """
    if not state.converged:
        raise ValueError("threshold extraction requires a converged state")
    if state.exact_z is not None:
        support = [i for i, v in enumerate(state.exact_z) if v > 0]
    else:
        support = [i for i in range(state.z.shape[0]) if state.z[i] > 0.0]
    _, beta = certified_beta(state_price_totals(state, support), state.eps, school)
    return beta


def require_converged(state: LeoState) -> LeoState:
    if not state.converged:
        raise NonConvergence(
            f"price iteration stalled at residual {state.residual:.3e} "
            f"after {state.restarts + 1} attempts",
            state=state,
            residual=state.residual,
        )
    return state
