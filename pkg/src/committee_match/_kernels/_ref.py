"""NumPy implementation of the equilibrium sweeps (fallback backend).

Semantics contract shared with the compiled backend:

* demands: an agent with budget b drawn uniformly from [1-eps, 1] picks the
  most-preferred item priced at most b; the closed form assigns each item
  the measure of its budget interval.
* allocation: greedy by descending value with the marginal mass split
  equally among the candidates exactly tied at the cutoff.
* residual: the largest violation of the equilibrium coordination
  conditions at the current state (see leo/meo modules for the breakdown).
* update: damped, clipped synchronous price step.

The loop returns a state whose (y, z, residual) are consistent with the
returned prices.
"""

from __future__ import annotations

import numpy as np


def demands(prices: np.ndarray, pref: np.ndarray, eps: float, empty_price: float):
    """Closed-form random demand for a batch of agents.

    prices, pref: (A, n) arrays; pref rows list item indices most preferred
    first.  Returns (y, y_empty) with y of shape (A, n); each row plus its
    empty mass sums to 1.
    """
    lo_budget = 1.0 - eps
    ps = np.take_along_axis(prices, pref, axis=1)
    cummin = np.minimum.accumulate(ps, axis=1)
    ceiling = np.empty_like(ps)
    ceiling[:, 0] = np.inf
    ceiling[:, 1:] = cummin[:, :-1]
    hi = np.minimum(ceiling, 1.0)
    lo = np.maximum(ps, lo_budget)
    y_sorted = np.maximum(hi - lo, 0.0) / eps
    y = np.empty_like(y_sorted)
    np.put_along_axis(y, pref, y_sorted, axis=1)
    hi_empty = np.minimum(cummin[:, -1], 1.0)
    lo_empty = max(empty_price, lo_budget)
    y_empty = np.maximum(hi_empty - lo_empty, 0.0) / eps
    return y, y_empty


def greedy_fill(values: np.ndarray, capacity: int) -> np.ndarray:
    """Revenue-greedy allocation onto [0,1]^n with total mass = capacity."""
    n = values.shape[0]
    if capacity >= n:
        return np.ones(n)
    cut = np.partition(values, n - capacity)[n - capacity]
    z = np.zeros(n)
    gt = values > cut
    z[gt] = 1.0
    eq = values == cut
    z[eq] = (capacity - gt.sum()) / eq.sum()
    return z


AVG_RATE = 1.0 / 256.0  # EMA rate for the allocation average fed to the polish


def leo_run(pref, alpha, p0, capacity, eps, gamma, tol, max_iter):
    """Single-school price iteration.

    pref: (K, n) int preference orders; alpha: (K,); p0: (K, n) start prices.
    Returns (p, y, y_empty, z, residual, iterations, z_avg) where z_avg is an
    exponential moving average of the allocation trajectory (the equilibrium
    regime survives averaging even when the instantaneous allocation flips
    between tied winners).
    """
    p = p0.astype(np.float64, copy=True)
    alpha_col = np.asarray(alpha, dtype=np.float64)[:, None]
    n = pref.shape[1]
    z_avg = np.zeros(n)
    it = 0
    while True:
        it += 1
        y, y_empty = demands(p, pref, eps, 0.0)
        totals = p.sum(axis=0)
        z = greedy_fill(totals, int(capacity))
        z_avg += AVG_RATE * (z - z_avg)
        excess = alpha_col * y - z[None, :]
        viol = float(np.maximum(excess, 0.0).max())
        comp = float((p * np.maximum(-excess, 0.0)).max())
        resid = max(viol, comp)
        if resid <= tol or it >= max_iter:
            return p, y, y_empty, z, resid, it, z_avg
        p = np.clip(p + gamma * excess, 0.0, 1.0)


def meo_run(
    stud_pref,
    member_pref,
    member_school,
    school_offsets,
    alpha,
    q0,
    p0,
    caps,
    eps,
    delta,
    gamma,
    tol,
    max_iter,
):
    """Multi-school price iteration.

    stud_pref: (n, m); member_pref: (K, n); member_school: (K,) owner school
    of each member; school_offsets: (m,) start index of each school's member
    block (members must be grouped by school); caps: (m,).
    Returns (q, p, x, x_empty, y, y_empty, z, residual, iterations, z_avg,
    x_avg) with z_avg/x_avg exponential moving averages of the allocation
    and student-demand trajectories.

    The condition-4 residual component is the full gap max|z - x.T| (not
    just the one-sided violation): the two coincide at any exact
    equilibrium of a padded instance, and the gap form certifies the
    fractional-matching property directly.
    """
    q = q0.astype(np.float64, copy=True)
    p = p0.astype(np.float64, copy=True)
    alpha_col = np.asarray(alpha, dtype=np.float64)[:, None]
    m = caps.shape[0]
    n = stud_pref.shape[0]
    z_avg = np.zeros((m, n))
    x_avg = np.zeros((n, m))
    it = 0
    while True:
        it += 1
        x, x_empty = demands(q, stud_pref, eps, 0.0)
        y, y_empty = demands(p, member_pref, eps, delta)
        totals = np.add.reduceat(p, school_offsets, axis=0)
        utilities = q.T * totals
        z = np.empty_like(utilities)
        for h in range(m):
            z[h] = greedy_fill(utilities[h], int(caps[h]))
        z_avg += AVG_RATE * (z - z_avg)
        x_avg += AVG_RATE * (x - x_avg)
        gap4 = float(np.abs(z - x.T).max())
        excess5 = alpha_col * y - z[member_school, :]
        viol5 = float(np.maximum(excess5, 0.0).max())
        comp5 = float(((p - delta) * np.maximum(-excess5, 0.0)).max())
        resid = max(gap4, viol5, comp5)
        if resid <= tol or it >= max_iter:
            return q, p, x, x_empty, y, y_empty, z, resid, it, z_avg, x_avg
        q = np.clip(q + gamma * (x - z.T), 0.0, 1.0)
        p = np.clip(p + gamma * excess5, delta, 1.0)
