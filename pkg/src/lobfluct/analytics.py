"""Closed-form quantities for the highly competitive regime.

Everything here assumes uniform catastrophes and ``gamma_plus > 0``,
``gamma_minus > 0`` (the spread is then positive recurrent).

Stationary laws
    ``mu`` is the stationary law of the continuous-time spread,
    ``pi`` that of its jump chain.  They are tied by
    ``pi(k) ∝ mu(k) r(k)`` with exit rates ``r(1) = gamma_plus``,
    ``r(k) = gamma`` for ``k >= 2``.

Drift and variance
    Several forms of the long-run drift and of the CLT variance are kept
    side by side (see :func:`drift_D`).  The ``longrun_*`` functions give
    the exact asymptotic variances obtained from the Poisson equation of
    the spread chain; they include the serial correlation of the bid
    increments that the single-step variance leaves out.

Large deviations
    :func:`rate_function`, :func:`ldp_exponent` and the optimal
    trajectories implement the rate functional for the scaled spread
    ``S(tT)/T`` together with its piecewise-linear minimizers.
    :func:`spread_tail_exact` computes ``P(S(T) > xT)`` at finite ``T``
    by uniformization, with no Monte Carlo error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit
from scipy.stats import poisson

from .model import HcParams, ModelError

DRIFT_METHODS = ("theorem", "lemma_times_gamma", "generator", "lemma_times_jump_rate")


def _require_ergodic(params: HcParams) -> None:
    if not isinstance(params, HcParams):
        raise ModelError("closed-form analytics exist only for the hc regime; use Monte Carlo for nc/llg")
    if not params.is_ergodic:
        raise ModelError("analytics need gamma_plus > 0 and gamma_minus > 0")


# --------------------------------------------------------------------------- #
# Stationary tables
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class StationaryTable:
    """Truncated stationary law on ``k = 1..K``.

    ``values[k-1]`` is the probability of spread ``k``; ``tail_bound``
    bounds the mass beyond ``K``.
    """

    kind: str  # "mu" or "pi"
    values: np.ndarray
    tail_bound: float
    params: HcParams

    @property
    def K(self) -> int:
        return len(self.values)

    @property
    def support(self) -> np.ndarray:
        return np.arange(1, self.K + 1)

    def __getitem__(self, k: int) -> float:
        return float(self.values[k - 1]) if 1 <= k <= self.K else 0.0

    def expect(self, fn) -> float:
        return float(np.dot(self.values, fn(self.support.astype(float))))

    @property
    def mean(self) -> float:
        return self.expect(lambda k: k)

    def to_list(self) -> list[float]:
        return self.values.tolist()


def _log_ratio_mu(params: HcParams, K: int) -> np.ndarray:
    # log(mu(n)/mu(1)) = log n + (n-1) log p - sum_{i<n} log(1 + q/i)
    n = np.arange(1, K + 1, dtype=float)
    log_prod = np.concatenate(([0.0], np.cumsum(np.log1p(params.q / n[:-1]))))
    return np.log(n) + (n - 1) * math.log(params.p) - log_prod


def _geometric_tail(p: float, K: int) -> float:
    # sum_{n > K} n p^(n-1)
    return ((K + 1) * p**K - K * p ** (K + 1)) / (1 - p) ** 2


def truncation_level(params: HcParams, eps: float) -> int:
    """Smallest ``K`` whose majorant tail ``sum_{n>K} n p^(n-1)`` (in units
    of ``mu(1)``) is below ``eps``, doubled once."""
    if not 0 < eps <= 1e-2:
        raise ModelError("eps must lie in (0, 1e-2]")
    p = params.p
    K = 1
    while _geometric_tail(p, K) >= eps:
        K *= 2
    lo, hi = K // 2, K
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if _geometric_tail(p, mid) < eps:
            hi = mid
        else:
            lo = mid
    return 2 * max(hi, 2)


def stationary_mu(params: HcParams, eps: float = 1e-12) -> StationaryTable:
    """Stationary law of the continuous-time spread."""
    _require_ergodic(params)
    K = truncation_level(params, eps)
    unnorm = np.exp(_log_ratio_mu(params, K))
    tail = _geometric_tail(params.p, K)
    z = math.fsum(unnorm) + tail
    return StationaryTable("mu", unnorm / z, tail / z, params)


def stationary_pi(params: HcParams, eps: float = 1e-12, check: bool = True) -> StationaryTable:
    """Stationary law of the spread jump chain from the closed-form ratio
    ``pi(n)/pi(1) = n p^(n-2) / prod_{i<n} (1 + q/i)``.

    With ``check`` the result is compared with :func:`pi_from_mu` and a
    disagreement above 1e-12 in total variation raises.
    """
    _require_ergodic(params)
    K = truncation_level(params, eps)
    log_r = _log_ratio_mu(params, K) - math.log(params.p)
    log_r[0] = 0.0
    unnorm = np.exp(log_r)
    # pi(n) < n p^(n-2) pi(1): the mu majorant divided by p
    tail = _geometric_tail(params.p, K) / params.p
    z = math.fsum(unnorm) + tail
    table = StationaryTable("pi", unnorm / z, tail / z, params)
    if check:
        other = pi_from_mu(stationary_mu(params, eps))
        gap = total_variation(table.values, other.values)
        if gap > 1e-12:
            raise ModelError(f"pi constructions disagree: TV {gap:.3e}")
    return table


def exit_rates(params: HcParams, K: int) -> np.ndarray:
    r = np.full(K, params.gamma)
    r[0] = params.gamma_plus
    return r


def pi_from_mu(mu: StationaryTable) -> StationaryTable:
    """Jump-chain law from the time-stationary law: ``pi ∝ mu * r``."""
    w = mu.values * exit_rates(mu.params, mu.K)
    tail = mu.tail_bound * mu.params.gamma
    z = math.fsum(w) + tail
    return StationaryTable("pi", w / z, tail / z, mu.params)


def mu_from_pi(pi: StationaryTable) -> StationaryTable:
    w = pi.values / exit_rates(pi.params, pi.K)
    tail = pi.tail_bound / pi.params.gamma_plus
    z = math.fsum(w) + tail
    return StationaryTable("mu", w / z, tail / z, pi.params)


def total_variation(a: Sequence[float], b: Sequence[float]) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    n = max(len(a), len(b))
    a = np.pad(a, (0, n - len(a)))
    b = np.pad(b, (0, n - len(b)))
    return 0.5 * float(np.abs(a - b).sum())


def mean_spread(params: HcParams, eps: float = 1e-12) -> float:
    """Time-stationary mean spread."""
    return stationary_mu(params, eps).mean


def global_balance_residual(mu: StationaryTable) -> np.ndarray:
    """``inflow(k) - mu(k) * exit(k)`` for ``k = 1..K`` on the truncated
    generator (rates to states above ``K`` dropped)."""
    p = mu.params
    m = mu.values
    K = mu.K
    k = np.arange(1, K + 1)
    down = np.zeros(K)
    down[1:] = p.gamma_minus * m[1:] / (k[1:] - 1)
    # inflow to k from every l > k: suffix sum of down over l > k
    from_above = np.concatenate((np.cumsum(down[::-1])[::-1][1:], [0.0]))
    inflow = from_above.copy()
    inflow[1:] += p.gamma_plus * m[:-1]
    out_rate = exit_rates(p, K)
    out_rate[-1] -= p.gamma_plus  # truncated: no move out of K upward
    return inflow - m * out_rate


def embedded_transition_matrix(params: HcParams, K: int, uniformized: bool = False) -> np.ndarray:
    """Dense jump-chain matrix on ``1..K``; the upward mass of state ``K``
    is folded back onto ``K``."""
    P = np.zeros((K, K))
    pu, qd = params.p, params.q
    if uniformized:
        P[0, 0] = qd
        P[0, 1 % K] += pu
    else:
        P[0, 1 % K] = 1.0
    for k in range(2, K + 1):
        P[k - 1, : k - 1] = qd / (k - 1)
        if k < K:
            P[k - 1, k] = pu
        else:
            P[k - 1, k - 1] += pu
    return P


def embedded_balance_residual(pi: StationaryTable) -> np.ndarray:
    P = embedded_transition_matrix(pi.params, pi.K)
    return pi.values @ P - pi.values


# --------------------------------------------------------------------------- #
# Drift
# --------------------------------------------------------------------------- #


def embedded_drift_v(params: HcParams, eps: float = 1e-10) -> float:
    """Long-run bid increment per jump of the spread chain."""
    _require_ergodic(params)
    if params.beta_minus == 0 and params.beta_plus == 0:
        return 0.0
    pi = stationary_pi(params, eps)
    ap, am, bp, bm = params.as_tuple()
    gp, gm, g = params.gamma_plus, params.gamma_minus, params.gamma
    return -bm / g - pi[1] / g * (bm * gm / gp + bp / 2) + bp / (2 * g) * pi.mean


def mean_jump_rate(params: HcParams, eps: float = 1e-12) -> float:
    """Long-run number of price events per second, ``gamma - mu(1) gamma_minus``."""
    mu = stationary_mu(params, eps)
    return params.gamma - mu[1] * params.gamma_minus


def drift_D(params: HcParams, method: str = "generator", eps: float = 1e-12) -> float:
    """Long-run bid drift ``lim P_b(t)/t`` in ticks per second.

    ``generator``
        ``(alpha_plus beta_plus - alpha_minus beta_minus) / gamma_minus``,
        the stationary mean of the bid velocity.  Ground truth.
    ``theorem``
        The stationary-law form with a factor ``gamma`` on the
        ``mu``-weighted terms.
    ``lemma_times_gamma``
        Per-jump drift times ``gamma``, i.e. treating the jump count as a
        Poisson process of rate ``gamma``.
    ``lemma_times_jump_rate``
        Per-jump drift times the true mean jump rate; agrees with
        ``generator``.
    """
    _require_ergodic(params)
    ap, am, bp, bm = params.as_tuple()
    gp, gm, g = params.gamma_plus, params.gamma_minus, params.gamma
    if method == "generator":
        return (ap * bp - am * bm) / gm
    if method == "theorem":
        mu = stationary_mu(params, eps)
        return -bm - mu[1] * g * (bm * gm / gp + bp / 2) + bp * g / 2 * mu.mean
    if method == "lemma_times_gamma":
        return embedded_drift_v(params) * g
    if method == "lemma_times_jump_rate":
        return embedded_drift_v(params) * mean_jump_rate(params, eps)
    raise ModelError(f"unknown drift method {method!r}; choose from {DRIFT_METHODS}")


# --------------------------------------------------------------------------- #
# Variance
# --------------------------------------------------------------------------- #


def clt_variance_embedded(params: HcParams, first_state: str = "pi", eps: float = 1e-10) -> float:
    """Stationary variance of one bid increment of the jump chain.

    ``first_state="mu"`` substitutes ``mu(1)`` for ``pi(1)`` in the
    boundary term, for comparison only.
    """
    _require_ergodic(params)
    if params.beta_minus == 0 and params.beta_plus == 0:
        return 0.0
    pi = stationary_pi(params, eps)
    if first_state == "pi":
        w1 = pi[1]
    elif first_state == "mu":
        w1 = stationary_mu(params, eps)[1]
    else:
        raise ModelError("first_state must be 'pi' or 'mu'")
    ap, am, bp, bm = params.as_tuple()
    gp, gm, g = params.gamma_plus, params.gamma_minus, params.gamma
    second = bm / g + w1 / g * (bm * gm / gp - bp / 6) + bp / (6 * g) * pi.expect(lambda s: s * (2 * s - 1))
    return second - embedded_drift_v(params, eps) ** 2


def volatility_sigma_n(params: HcParams, n: int) -> float:
    if int(n) < 1:
        raise ModelError("n must be >= 1")
    return math.sqrt(int(n) * clt_variance_embedded(params))


def clt_variance_continuous(params: HcParams) -> float:
    """``(sigma^2 + v^2) gamma``: the continuous-time variance obtained by
    treating the jump count as Poisson(gamma) independent of the chain."""
    return (clt_variance_embedded(params) + embedded_drift_v(params) ** 2) * params.gamma


def _increment_moments(params: HcParams, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Conditional first and second moments of the bid increment for
    every jump ``x -> y`` of the truncated jump chain."""
    g1 = np.zeros((K, K))
    g2 = np.zeros((K, K))
    up = params.beta_minus / params.gamma_plus
    dn = params.beta_plus / params.gamma_minus
    for x in range(1, K + 1):
        if x < K:
            g1[x - 1, x] = -up
            g2[x - 1, x] = up
        d = x - np.arange(1, x)
        g1[x - 1, : x - 1] = d * dn
        g2[x - 1, : x - 1] = d * d * dn
    return g1, g2


def longrun_variance_embedded(params: HcParams, eps: float = 1e-12, max_states: int = 4000) -> float:
    """Asymptotic variance of ``p_n / sqrt(n)``, serial correlation
    included, via the Poisson equation of the jump chain."""
    _require_ergodic(params)
    K = min(truncation_level(params, eps), max_states)
    P = embedded_transition_matrix(params, K)
    pi = stationary_pi(params, eps).values[:K]
    pi = pi / pi.sum()
    g1, g2 = _increment_moments(params, K)
    step_mean = (P * g1).sum(axis=1)
    v = float(pi @ step_mean)
    # (I - P + 1 pi) h = step_mean - v
    h = np.linalg.solve(np.eye(K) - P + np.outer(np.ones(K), pi), step_mean - v)
    c = h[None, :] - (step_mean + P @ h)[:, None]
    m2 = P * (g2 + 2 * c * g1 + c * c)
    return float(pi @ m2.sum(axis=1))


def longrun_variance_continuous(params: HcParams, eps: float = 1e-12, max_states: int = 4000) -> float:
    """Asymptotic variance of ``P_b(t) / sqrt(t)`` for the continuous-time
    bid, via the Poisson equation of the spread generator."""
    _require_ergodic(params)
    K = min(truncation_level(params, eps), max_states)
    gp, gm = params.gamma_plus, params.gamma_minus
    Q = embedded_transition_matrix(params, K) * exit_rates(params, K)[:, None]
    np.fill_diagonal(Q, 0.0)
    Q[np.diag_indices(K)] = -Q.sum(axis=1)
    mu = stationary_mu(params, eps).values[:K]
    mu = mu / mu.sum()
    g1, g2 = _increment_moments(params, K)
    rates = Q.copy()
    np.fill_diagonal(rates, 0.0)
    velocity = (rates * g1).sum(axis=1)
    D = float(mu @ velocity)
    # -Q h = velocity - D, pinned by mu.h = 0
    h = np.linalg.solve(-Q + np.outer(np.ones(K), mu), velocity - D)
    c = h[None, :] - h[:, None]
    return float(mu @ (rates * (g2 + 2 * c * g1 + c * c)).sum(axis=1))


def next_move_prob(params: HcParams) -> float:
    """Probability that the next mid-price move is upward."""
    return (params.alpha_plus + params.beta_plus) / (params.gamma_plus + params.gamma_minus)


# --------------------------------------------------------------------------- #
# Large deviations
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class PiecewiseLinearTrajectory:
    """Continuous piecewise-linear function on [0, 1]."""

    t: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self) -> None:
        t = tuple(float(v) for v in self.t)
        y = tuple(float(v) for v in self.y)
        if len(t) != len(y) or len(t) < 2:
            raise ModelError("need at least two matching breakpoints")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise ModelError("breakpoints must start at 0 and end at 1")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ModelError("breakpoint times must increase strictly")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_slopes(cls, y0: float, lengths: Sequence[float], slopes: Sequence[float]) -> PiecewiseLinearTrajectory:
        t, y = [0.0], [float(y0)]
        for ln, s in zip(lengths, slopes):
            t.append(t[-1] + ln)
            y.append(y[-1] + s * ln)
        t[-1] = 1.0
        return cls(tuple(t), tuple(y))

    @property
    def slopes(self) -> tuple[float, ...]:
        return tuple((y1 - y0) / (t1 - t0) for t0, t1, y0, y1 in zip(self.t, self.t[1:], self.y, self.y[1:]))

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(t1 - t0 for t0, t1 in zip(self.t, self.t[1:]))

    def __call__(self, s):
        return np.interp(s, self.t, self.y)

    @property
    def terminal(self) -> float:
        return self.y[-1]


@dataclass(frozen=True)
class RateFunctionValue:
    value: float
    trajectory: PiecewiseLinearTrajectory | None = None
    terminal: float | None = None


def _poisson_cost(slope: float, rate: float) -> float:
    # slope ln(slope/rate) - rate (slope/rate - 1), charged only above rate
    if slope <= rate:
        return 0.0
    return slope * math.log(slope / rate) - (slope - rate)


def rate_function(f: PiecewiseLinearTrajectory, params: HcParams) -> RateFunctionValue:
    """Rate functional of the scaled spread on a piecewise-linear path.

    Only the positive part of each slope is charged, and only where it
    exceeds ``gamma_plus``.
    """
    gp, gm = params.gamma_plus, params.gamma_minus
    if gp <= 0:
        raise ModelError("rate function needs gamma_plus > 0")
    cost = math.fsum(ln * _poisson_cost(max(s, 0.0), gp) for ln, s in zip(f.lengths, f.slopes))
    return RateFunctionValue(gm + cost, trajectory=f)


def _check_level(x: float) -> float:
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise ModelError(f"terminal level must be positive, got {x!r}")
    return x


def ldp_exponent(x: float, params: HcParams) -> float:
    """Decay rate of ``P(S(T)/T > x)``: ``gamma_minus`` below
    ``gamma_plus``, Poisson cost added above."""
    x = _check_level(x)
    gp, gm = params.gamma_plus, params.gamma_minus
    if x < gp:
        return gm
    return gm + x * math.log(x / gp) - (x - gp)


def optimal_spread_trajectory(x: float, params: HcParams) -> PiecewiseLinearTrajectory:
    x = _check_level(x)
    gp = params.gamma_plus
    if x < gp:
        tx = 1.0 - x / gp
        return PiecewiseLinearTrajectory((0.0, tx, 1.0), (0.0, 0.0, x))
    return PiecewiseLinearTrajectory((0.0, 1.0), (0.0, x))


def bifurcation_time(x: float, params: HcParams) -> float:
    x = _check_level(x)
    return max(0.0, 1.0 - x / params.gamma_plus)


def optimal_price_trajectories(x: float, params: HcParams) -> tuple[PiecewiseLinearTrajectory, PiecewiseLinearTrajectory]:
    """Scaled (bid, ask) displacements along the optimal spread path.

    After the bifurcation the ask rises at ``alpha_plus * m`` and the bid
    falls at ``beta_minus * m`` with ``m = max(1, x / gamma_plus)``.
    """
    spread = optimal_spread_trajectory(x, params)
    gp = params.gamma_plus
    m = max(1.0, x / gp)
    ask_slope, bid_slope = params.alpha_plus * m, -params.beta_minus * m
    ask_y = [0.0] * len(spread.t)
    bid_y = [0.0] * len(spread.t)
    for i in range(1, len(spread.t)):
        rising = spread.y[i] > spread.y[i - 1]
        dt = spread.t[i] - spread.t[i - 1]
        ask_y[i] = ask_y[i - 1] + (ask_slope * dt if rising else 0.0)
        bid_y[i] = bid_y[i - 1] + (bid_slope * dt if rising else 0.0)
    # pin the terminal gap to x exactly
    ask_y[-1] = x * params.alpha_plus / gp
    bid_y[-1] = -x * params.beta_minus / gp
    return PiecewiseLinearTrajectory(spread.t, tuple(bid_y)), PiecewiseLinearTrajectory(spread.t, tuple(ask_y))


@njit(cache=True)
def _uniformized_law(gp, gm, k0, lam_t, weights, K):
    g = gp + gm
    p = np.zeros(K)
    p[k0 - 1] = 1.0
    acc = weights[0] * p
    for n in range(1, weights.shape[0]):
        new = np.zeros(K)
        suffix = 0.0
        for i in range(K - 1, -1, -1):
            k = i + 1
            new[i] += suffix
            if k >= 2:
                suffix += p[i] * gm / (g * (k - 1))
            stay = 1.0 - (gp if k == 1 else g) / g
            new[i] += p[i] * stay
            if i + 1 < K:
                new[i + 1] += p[i] * gp / g
            else:
                new[i] += p[i] * gp / g
        p = new
        acc += weights[n] * p
    return acc


def spread_law_at(params: HcParams, T: float, k0: int = 1, rel_tol: float = 1e-14) -> np.ndarray:
    """Exact law of ``S(T)`` started from ``k0``, by uniformization at rate
    ``gamma``.  Entry ``k-1`` is ``P(S(T) = k)``.  The lattice is large
    enough that the spread cannot leave it within the retained number of
    uniformization steps, so the only error is the dropped Poisson tail
    (below ``rel_tol``).  ``gamma_minus = 0`` (pure births) is allowed."""
    if not isinstance(params, HcParams) or not params.gamma_plus > 0:
        raise ModelError("exact spread law needs hc parameters with gamma_plus > 0")
    lam_t = params.gamma * float(T)
    n_max = int(poisson.isf(rel_tol, lam_t)) + 10
    weights = poisson.pmf(np.arange(n_max + 1), lam_t)
    K = int(k0) + n_max + 1
    return _uniformized_law(params.gamma_plus, params.gamma_minus, int(k0), lam_t, weights, K)


def spread_tail_exact(params: HcParams, x: float, T: float, k0: int = 1) -> float:
    """``P(S(T)/T > x)``, exact up to the uniformization tail."""
    law = spread_law_at(params, T, k0)
    k = np.arange(1, len(law) + 1)
    return float(law[k > x * T].sum())
