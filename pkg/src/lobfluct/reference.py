"""Pure Python event loops.

Slow twins of the compiled kernels, consuming the generator in the same
order with the same arithmetic.  They serve custom catastrophe laws
(which the kernels cannot call) and act as a cross-check in the tests.
"""

from __future__ import annotations

import math

import numpy as np

from .model import CatastropheDist, HcParams, LlgParams, NcParams, RegimeSpec


def _class_rates(regime: RegimeSpec, k: int, wcum: list[float]) -> list[float]:
    p = regime.params
    closing = k >= 2
    if isinstance(p, LlgParams):
        ka = float(k) ** p.kappa_a
        kb = float(k) ** p.kappa_b
        return [
            p.alpha_plus / ka,
            p.alpha_minus / ka if closing else 0.0,
            p.beta_plus / kb if closing else 0.0,
            p.beta_minus / kb,
        ]
    scale = 1.0
    if isinstance(p, NcParams) and closing:
        _extend_prefix(wcum, k - 1, p.mu_exp)
        scale = wcum[k - 2]
    return [
        p.alpha_plus,
        p.alpha_minus * scale if closing else 0.0,
        p.beta_plus * scale if closing else 0.0,
        p.beta_minus,
    ]


def _extend_prefix(wcum: list[float], m: int, mu_exp: float) -> None:
    acc = wcum[-1] if wcum else 0.0
    for d in range(len(wcum) + 1, m + 1):
        acc += float(d) ** (-mu_exp)
        wcum.append(acc)


def _pick(rates: list[float], u: float) -> int:
    total = 0.0
    for r in rates:
        total += r
    x = u * total
    acc = 0.0
    last = -1
    for i, r in enumerate(rates):
        if r > 0.0:
            acc += r
            last = i
            if x < acc:
                return i
    return last


def _up_increment(regime: RegimeSpec, u: float) -> int:
    if isinstance(regime.params, LlgParams):
        return 1 + int(math.floor(math.log1p(-u) / math.log1p(-regime.params.theta)))
    return 1


def _down_increment(regime: RegimeSpec, k: int, u: float, wcum: list[float]) -> int:
    p = regime.params
    m = k - 1
    if isinstance(p, HcParams):
        return regime.catastrophe.sample(k, u)
    if isinstance(p, NcParams):
        target = u * wcum[m - 1]
        lo, hi = 0, m - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if wcum[mid] > target:
                hi = mid
            else:
                lo = mid + 1
        return lo + 1
    lg = math.log1p(-p.theta)
    norm = -math.expm1(m * lg)
    d = 1 + int(math.floor(math.log1p(-u * norm) / lg))
    return min(max(d, 1), m)


def book_path(regime: RegimeSpec, rng: np.random.Generator, bid: int, ask: int, horizon: float, max_events: int):
    """Returns ``(ceiling_hit, times, classes, deltas, bid, ask)``."""
    wcum: list[float] = []
    times: list[float] = []
    classes: list[int] = []
    deltas: list[int] = []
    t = 0.0
    while True:
        k = ask - bid
        rates = _class_rates(regime, k, wcum)
        total = rates[0] + rates[1] + rates[2] + rates[3]
        if total <= 0.0:
            break
        dt = -math.log1p(-rng.random()) / total
        if t + dt > horizon:
            break
        t += dt
        c = _pick(rates, rng.random())
        u = rng.random()
        if c in (0, 3):
            d = _up_increment(regime, u)
            if c == 0:
                ask += d
            else:
                bid -= d
        else:
            d = _down_increment(regime, k, u, wcum)
            if c == 1:
                ask -= d
            else:
                bid += d
        times.append(t)
        classes.append(c)
        deltas.append(d)
        if len(times) >= max_events:
            return True, times, classes, deltas, bid, ask
    return False, times, classes, deltas, bid, ask


def spread_path(regime: RegimeSpec, rng: np.random.Generator, k: int, horizon: float, max_events: int):
    """Returns ``(ceiling_hit, times, spreads)``."""
    wcum: list[float] = []
    times: list[float] = []
    spreads: list[int] = []
    t = 0.0
    while True:
        rates = _class_rates(regime, k, wcum)
        ud = [rates[0] + rates[3], rates[1] + rates[2]]
        total = ud[0] + ud[1]
        if total <= 0.0:
            break
        dt = -math.log1p(-rng.random()) / total
        if t + dt > horizon:
            break
        t += dt
        c = _pick(ud, rng.random())
        u = rng.random()
        if c == 0:
            k += _up_increment(regime, u)
        else:
            k -= _down_increment(regime, k, u, wcum)
        times.append(t)
        spreads.append(k)
        if len(times) >= max_events:
            return True, times, spreads
    return False, times, spreads


def embedded_path(
    params: HcParams,
    cat: CatastropheDist,
    rng: np.random.Generator,
    s0: int,
    n_steps: int,
    uniformized: bool,
) -> tuple[list[int], list[int]]:
    p_up = params.gamma_plus / params.gamma
    thr_up = params.beta_minus / params.gamma_plus if params.gamma_plus > 0 else 0.0
    thr_down = params.beta_plus / params.gamma_minus if params.gamma_minus > 0 else 0.0
    s, p = s0, 0
    spreads, prices = [s], [p]
    for _ in range(n_steps):
        u_cls, u_inc, u_f = rng.random(), rng.random(), rng.random()
        if s == 1:
            nxt = 1 if uniformized and u_cls >= p_up else 2
        elif u_cls < p_up:
            nxt = s + 1
        else:
            nxt = s - cat.sample(s, u_inc)
        f = 0
        if nxt == s + 1 and u_f < thr_up:
            f = -1
        elif nxt < s and u_f < thr_down:
            f = s - nxt
        s = nxt
        p += f
        spreads.append(s)
        prices.append(p)
    return spreads, prices
