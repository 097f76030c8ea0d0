# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the NumPy kernels in ``_ref``.

Same sweep semantics (demands, greedy allocation with exact-tie split,
residual, damped clipped update, allocation averages); the whole iteration
loop runs in C.  See ``_ref`` for the authoritative description.
"""

import numpy as np

from libc.math cimport INFINITY
from libc.stdlib cimport free, malloc, qsort


cdef int _cmp_desc(const void* a, const void* b) noexcept nogil:
    cdef double x = (<const double*> a)[0]
    cdef double y = (<const double*> b)[0]
    if x > y:
        return -1
    if x < y:
        return 1
    return 0


cdef void _demands(
    double[:, ::1] prices,
    long[:, ::1] pref,
    double eps,
    double empty_price,
    double[:, ::1] y,
    double[::1] y_empty,
) noexcept nogil:
    cdef Py_ssize_t agents = prices.shape[0]
    cdef Py_ssize_t n = prices.shape[1]
    cdef Py_ssize_t a, r, s
    cdef double lo_budget = 1.0 - eps
    cdef double ceiling, hi, lo, val
    for a in range(agents):
        ceiling = INFINITY
        for r in range(n):
            s = pref[a, r]
            hi = ceiling if ceiling < 1.0 else 1.0
            lo = prices[a, s] if prices[a, s] > lo_budget else lo_budget
            val = hi - lo
            if val < 0.0:
                val = 0.0
            y[a, s] = val / eps
            if prices[a, s] < ceiling:
                ceiling = prices[a, s]
        hi = ceiling if ceiling < 1.0 else 1.0
        lo = empty_price if empty_price > lo_budget else lo_budget
        val = hi - lo
        if val < 0.0:
            val = 0.0
        y_empty[a] = val / eps


cdef void _greedy(
    double[::1] values, long capacity, double[::1] z, double* scratch
) noexcept nogil:
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i
    cdef double cut, share
    cdef long gt = 0, eq = 0
    if capacity >= n:
        for i in range(n):
            z[i] = 1.0
        return
    for i in range(n):
        scratch[i] = values[i]
    qsort(scratch, n, sizeof(double), _cmp_desc)
    cut = scratch[capacity - 1]
    for i in range(n):
        if values[i] > cut:
            gt += 1
        elif values[i] == cut:
            eq += 1
    share = (<double> (capacity - gt)) / (<double> eq)
    for i in range(n):
        if values[i] > cut:
            z[i] = 1.0
        elif values[i] == cut:
            z[i] = share
        else:
            z[i] = 0.0


def demands(prices, pref, double eps, double empty_price):
    """Batch random demand; mirrors ``_ref.demands``."""
    p = np.ascontiguousarray(prices, dtype=np.float64)
    o = np.ascontiguousarray(pref, dtype=np.int64)
    y = np.empty_like(p)
    y_empty = np.empty(p.shape[0])
    _demands(p, o, eps, empty_price, y, y_empty)
    return y, y_empty


def greedy_fill(values, capacity):
    """Greedy allocation with exact-tie split; mirrors ``_ref.greedy_fill``."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    z = np.empty_like(v)
    cdef double* scratch = <double*> malloc(v.shape[0] * sizeof(double))
    if scratch == NULL:
        raise MemoryError
    try:
        _greedy(v, int(capacity), z, scratch)
    finally:
        free(scratch)
    return z


AVG_RATE = 1.0 / 256.0


def leo_run(pref, alpha, p0, capacity, double eps, double gamma,
            double tol, long max_iter):
    """Single-school price iteration; mirrors ``_ref.leo_run``."""
    cdef long[:, ::1] pref_v = np.ascontiguousarray(pref, dtype=np.int64)
    cdef double[::1] alpha_v = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef Py_ssize_t k_count = pref_v.shape[0]
    cdef Py_ssize_t n = pref_v.shape[1]
    p_arr = np.array(p0, dtype=np.float64, copy=True, order="C")
    y_arr = np.zeros((k_count, n))
    ye_arr = np.zeros(k_count)
    z_arr = np.zeros(n)
    t_arr = np.zeros(n)
    zavg_arr = np.zeros(n)
    cdef double[:, ::1] p = p_arr
    cdef double[:, ::1] y = y_arr
    cdef double[::1] y_empty = ye_arr
    cdef double[::1] z = z_arr
    cdef double[::1] totals = t_arr
    cdef double[::1] z_avg = zavg_arr
    cdef long cap = int(capacity)
    cdef double rate = AVG_RATE
    cdef double resid = 0.0, excess, viol, nxt
    cdef Py_ssize_t k, i
    cdef long it = 0
    cdef double* scratch = <double*> malloc(n * sizeof(double))
    if scratch == NULL:
        raise MemoryError
    try:
        with nogil:
            while True:
                it += 1
                _demands(p, pref_v, eps, 0.0, y, y_empty)
                for i in range(n):
                    totals[i] = 0.0
                for k in range(k_count):
                    for i in range(n):
                        totals[i] += p[k, i]
                _greedy(totals, cap, z, scratch)
                for i in range(n):
                    z_avg[i] += rate * (z[i] - z_avg[i])
                resid = 0.0
                for k in range(k_count):
                    for i in range(n):
                        excess = alpha_v[k] * y[k, i] - z[i]
                        if excess > 0.0:
                            viol = excess
                        else:
                            viol = p[k, i] * (-excess)
                        if viol > resid:
                            resid = viol
                if resid <= tol or it >= max_iter:
                    break
                for k in range(k_count):
                    for i in range(n):
                        nxt = p[k, i] + gamma * (alpha_v[k] * y[k, i] - z[i])
                        if nxt < 0.0:
                            nxt = 0.0
                        elif nxt > 1.0:
                            nxt = 1.0
                        p[k, i] = nxt
    finally:
        free(scratch)
    return p_arr, y_arr, ye_arr, z_arr, resid, it, zavg_arr


def meo_run(stud_pref, member_pref, member_school, school_offsets, alpha,
            q0, p0, caps, double eps, double delta, double gamma,
            double tol, long max_iter):
    """Market price iteration; mirrors ``_ref.meo_run``."""
    cdef long[:, ::1] spref = np.ascontiguousarray(stud_pref, dtype=np.int64)
    cdef long[:, ::1] mpref = np.ascontiguousarray(member_pref, dtype=np.int64)
    cdef long[::1] msch = np.ascontiguousarray(member_school, dtype=np.int64)
    cdef long[::1] offs = np.ascontiguousarray(school_offsets, dtype=np.int64)
    cdef double[::1] alpha_v = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef long[::1] caps_v = np.ascontiguousarray(caps, dtype=np.int64)
    cdef Py_ssize_t n = spref.shape[0]
    cdef Py_ssize_t m = spref.shape[1]
    cdef Py_ssize_t k_count = mpref.shape[0]
    q_arr = np.array(q0, dtype=np.float64, copy=True, order="C")
    p_arr = np.array(p0, dtype=np.float64, copy=True, order="C")
    x_arr = np.zeros((n, m))
    xe_arr = np.zeros(n)
    y_arr = np.zeros((k_count, n))
    ye_arr = np.zeros(k_count)
    z_arr = np.zeros((m, n))
    u_arr = np.zeros((m, n))
    zavg_arr = np.zeros((m, n))
    xavg_arr = np.zeros((n, m))
    cdef double[:, ::1] q = q_arr
    cdef double[:, ::1] p = p_arr
    cdef double[:, ::1] x = x_arr
    cdef double[::1] x_empty = xe_arr
    cdef double[:, ::1] y = y_arr
    cdef double[::1] y_empty = ye_arr
    cdef double[:, ::1] z = z_arr
    cdef double[:, ::1] u = u_arr
    cdef double[:, ::1] z_avg = zavg_arr
    cdef double[:, ::1] x_avg = xavg_arr
    cdef double rate = AVG_RATE
    cdef double resid = 0.0, gap, excess, viol, tp, nxt
    cdef Py_ssize_t h, i, k
    cdef long k_lo, k_hi
    cdef long it = 0
    cdef double* scratch = <double*> malloc(n * sizeof(double))
    if scratch == NULL:
        raise MemoryError
    try:
        with nogil:
            while True:
                it += 1
                _demands(q, spref, eps, 0.0, x, x_empty)
                _demands(p, mpref, eps, delta, y, y_empty)
                for h in range(m):
                    k_lo = offs[h]
                    k_hi = offs[h + 1] if h + 1 < m else k_count
                    for i in range(n):
                        tp = 0.0
                        for k in range(k_lo, k_hi):
                            tp += p[k, i]
                        u[h, i] = q[i, h] * tp
                    _greedy(u[h], caps_v[h], z[h], scratch)
                for h in range(m):
                    for i in range(n):
                        z_avg[h, i] += rate * (z[h, i] - z_avg[h, i])
                for i in range(n):
                    for h in range(m):
                        x_avg[i, h] += rate * (x[i, h] - x_avg[i, h])
                resid = 0.0
                for h in range(m):
                    for i in range(n):
                        gap = z[h, i] - x[i, h]
                        if gap < 0.0:
                            gap = -gap
                        if gap > resid:
                            resid = gap
                for k in range(k_count):
                    h = msch[k]
                    for i in range(n):
                        excess = alpha_v[k] * y[k, i] - z[h, i]
                        if excess > 0.0:
                            viol = excess
                        else:
                            viol = (p[k, i] - delta) * (-excess)
                        if viol > resid:
                            resid = viol
                if resid <= tol or it >= max_iter:
                    break
                for i in range(n):
                    for h in range(m):
                        nxt = q[i, h] + gamma * (x[i, h] - z[h, i])
                        if nxt < 0.0:
                            nxt = 0.0
                        elif nxt > 1.0:
                            nxt = 1.0
                        q[i, h] = nxt
                for k in range(k_count):
                    h = msch[k]
                    for i in range(n):
                        nxt = p[k, i] + gamma * (alpha_v[k] * y[k, i] - z[h, i])
                        if nxt < delta:
                            nxt = delta
                        elif nxt > 1.0:
                            nxt = 1.0
                        p[k, i] = nxt
    finally:
        free(scratch)
    return (q_arr, p_arr, x_arr, xe_arr, y_arr, ye_arr, z_arr, resid, it,
            zavg_arr, xavg_arr)
