"""Compiled event loops.

Every kernel draws uniforms from a ``numpy.random.Generator`` passed in
by the caller, in a fixed order per event:

    book / spread:  holding time, move class, increment
    embedded:       move class, increment, F's uniform

An increment uniform is consumed even when the increment is fixed at one
tick, so the stream position depends only on the event count.  The pure
Python loops in :mod:`lobfluct.reference` follow the same order and the
same floating point expressions, which is what lets the test-suite
compare the two bit for bit.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

HC, NC, LLG = 0, 1, 2
CAT_UNIFORM, CAT_TWO_PART = 0, 1

STATUS_OK = 0
STATUS_EVENT_CEILING = 1


@njit(cache=True)
def power_prefix(m, mu_exp):
    """Cumulative sums of ``d ** -mu_exp`` for d = 1..m."""
    out = np.empty(m)
    acc = 0.0
    for d in range(1, m + 1):
        acc += float(d) ** (-mu_exp)
        out[d - 1] = acc
    return out


@njit(cache=True)
def _ensure_prefix(wcum, m, mu_exp):
    if m <= wcum.shape[0]:
        return wcum
    size = wcum.shape[0] * 2
    while size < m:
        size *= 2
    return power_prefix(size, mu_exp)


@njit(cache=True)
def class_rates(code, rp, k, wcum, out):
    """Fill ``out`` with the four class totals at spread ``k``."""
    closing = k >= 2
    if code == LLG:
        ka = float(k) ** rp[4]
        kb = float(k) ** rp[5]
        out[0] = rp[0] / ka
        out[1] = rp[1] / ka if closing else 0.0
        out[2] = rp[2] / kb if closing else 0.0
        out[3] = rp[3] / kb
        return
    scale = 1.0
    if code == NC and closing:
        scale = wcum[k - 2]
    out[0] = rp[0]
    out[1] = rp[1] * scale if closing else 0.0
    out[2] = rp[2] * scale if closing else 0.0
    out[3] = rp[3]


@njit(cache=True)
def pick(rates, n, u):
    """Index chosen proportionally to ``rates[:n]`` using one uniform."""
    total = 0.0
    for i in range(n):
        total += rates[i]
    x = u * total
    acc = 0.0
    last = -1
    for i in range(n):
        if rates[i] > 0.0:
            acc += rates[i]
            last = i
            if x < acc:
                return i
    return last


@njit(cache=True)
def up_increment(code, rp, u):
    if code == LLG:
        return 1 + int(math.floor(math.log1p(-u) / math.log1p(-rp[6])))
    return 1


@njit(cache=True)
def down_increment(code, rp, cat, cp, k, u, wcum):
    m = k - 1
    if code == HC:
        if cat == CAT_UNIFORM or m == 1:
            return 1 + min(int(u * m), m - 1)
        j = min(max(int(math.ceil(cp[0] * m)), 1), m - 1)
        w = cp[1]
        if u < w:
            return 1 + min(int(u / w * j), j - 1)
        return j + 1 + min(int((u - w) / (1.0 - w) * (m - j)), m - j - 1)
    if code == NC:
        target = u * wcum[m - 1]
        lo = 0
        hi = m - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if wcum[mid] > target:
                hi = mid
            else:
                lo = mid + 1
        return lo + 1
    lg = math.log1p(-rp[6])
    norm = -math.expm1(m * lg)
    d = 1 + int(math.floor(math.log1p(-u * norm) / lg))
    return min(max(d, 1), m)


@njit(cache=True)
def _grow_f(a, n):
    out = np.empty(n, a.dtype)
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def book_path(rng, code, rp, cat, cp, wcum, b0, a0, horizon, max_events, record, kmax):
    """Simulate (bid, ask) on [0, horizon].

    Returns ``(status, n, bid, ask, times, classes, deltas, occupancy,
    visits)``.  Event arrays are filled only when ``record`` is true.
    ``occupancy[k]`` is the time spent at spread ``k`` and ``visits[k]``
    the number of jumps into ``k``; spreads beyond ``kmax`` share the
    last bin.
    """
    rates = np.empty(4)
    cap = 1024 if record else 1
    times = np.empty(cap)
    classes = np.empty(cap, np.int8)
    deltas = np.empty(cap, np.int64)
    occupancy = np.zeros(kmax + 1)
    visits = np.zeros(kmax + 1, np.int64)
    t = 0.0
    b = b0
    a = a0
    n = 0
    status = STATUS_OK
    while True:
        k = a - b
        if code == NC:
            wcum = _ensure_prefix(wcum, k, rp[4])
        class_rates(code, rp, k, wcum, rates)
        total = rates[0] + rates[1] + rates[2] + rates[3]
        kb = min(k, kmax)
        if total <= 0.0:
            occupancy[kb] += horizon - t
            break
        dt = -math.log1p(-rng.random()) / total
        if t + dt > horizon:
            occupancy[kb] += horizon - t
            break
        occupancy[kb] += dt
        t += dt
        c = pick(rates, 4, rng.random())
        u = rng.random()
        if c == 0:
            d = up_increment(code, rp, u)
            a += d
        elif c == 3:
            d = up_increment(code, rp, u)
            b -= d
        else:
            d = down_increment(code, rp, cat, cp, k, u, wcum)
            if c == 1:
                a -= d
            else:
                b += d
        visits[min(a - b, kmax)] += 1
        if record:
            if n == cap:
                cap *= 2
                times = _grow_f(times, cap)
                classes = _grow_f(classes, cap)
                deltas = _grow_f(deltas, cap)
            times[n] = t
            classes[n] = c
            deltas[n] = d
        n += 1
        if n >= max_events:
            status = STATUS_EVENT_CEILING
            break
    if not record:
        times = times[:0]
        classes = classes[:0]
        deltas = deltas[:0]
    return status, n, b, a, times[:n], classes[:n], deltas[:n], occupancy, visits


@njit(cache=True)
def spread_path(rng, code, rp, cat, cp, wcum, k0, horizon, max_events, record, kmax):
    """Simulate the spread chain alone on [0, horizon].

    Returns ``(status, n, k_final, k_max_seen, times, spreads, occupancy,
    visits)``; ``spreads[i]`` is the spread right after ``times[i]``.
    """
    rates = np.empty(4)
    ud = np.empty(2)
    cap = 1024 if record else 1
    times = np.empty(cap)
    spreads = np.empty(cap, np.int64)
    occupancy = np.zeros(kmax + 1)
    visits = np.zeros(kmax + 1, np.int64)
    t = 0.0
    k = k0
    top = k0
    n = 0
    status = STATUS_OK
    while True:
        if code == NC:
            wcum = _ensure_prefix(wcum, k, rp[4])
        class_rates(code, rp, k, wcum, rates)
        ud[0] = rates[0] + rates[3]
        ud[1] = rates[1] + rates[2]
        total = ud[0] + ud[1]
        kb = min(k, kmax)
        if total <= 0.0:
            occupancy[kb] += horizon - t
            break
        dt = -math.log1p(-rng.random()) / total
        if t + dt > horizon:
            occupancy[kb] += horizon - t
            break
        occupancy[kb] += dt
        t += dt
        c = pick(ud, 2, rng.random())
        u = rng.random()
        if c == 0:
            k += up_increment(code, rp, u)
        else:
            k -= down_increment(code, rp, cat, cp, k, u, wcum)
        if k > top:
            top = k
        visits[min(k, kmax)] += 1
        if record:
            if n == cap:
                cap *= 2
                times = _grow_f(times, cap)
                spreads = _grow_f(spreads, cap)
            times[n] = t
            spreads[n] = k
        n += 1
        if n >= max_events:
            status = STATUS_EVENT_CEILING
            break
    if not record:
        times = times[:0]
        spreads = spreads[:0]
    return status, n, k, top, times[:n], spreads[:n], occupancy, visits


@njit(cache=True)
def embedded_path(rng, p_up, thr_up, thr_down, cat, cp, s0, n_steps, uniformized, record):
    """Jump chain of the HC spread with the bid increment function.

    ``p_up = gamma_plus / gamma``; the bid moves on an opening when
    ``u < thr_up`` (beta_minus / gamma_plus) and on a closing when
    ``u < thr_down`` (beta_plus / gamma_minus).

    Returns ``(s_final, p_final, spreads, prices, f_sum_sq)``; the arrays
    hold s_0..s_n and p_0..p_n when ``record`` is set.
    """
    size = n_steps + 1 if record else 1
    spreads = np.empty(size, np.int64)
    prices = np.empty(size, np.int64)
    s = s0
    p = 0
    sq = 0.0
    if record:
        spreads[0] = s
        prices[0] = 0
    for i in range(1, n_steps + 1):
        u_cls = rng.random()
        u_inc = rng.random()
        u_f = rng.random()
        f = 0
        if s == 1:
            if uniformized and u_cls >= p_up:
                nxt = 1
            else:
                nxt = 2
        elif u_cls < p_up:
            nxt = s + 1
        else:
            nxt = s - down_increment(HC, cp, cat, cp, s, u_inc, cp)
        if nxt == s + 1:
            if u_f < thr_up:
                f = -1
        elif nxt < s:
            if u_f < thr_down:
                f = s - nxt
        s = nxt
        p += f
        sq += f * f
        if record:
            spreads[i] = s
            prices[i] = p
    return s, p, spreads, prices, sq
