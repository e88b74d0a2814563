from __future__ import annotations

import math

import numpy as np
import oracles as O
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats

from lobfluct import analytics as A
from lobfluct.model import HcParams, ModelError
from lobfluct.simulate import EmbeddedTerminal, ensemble
from lobfluct.verify import spread_tail_decay_rate

rate = st.floats(min_value=0.05, max_value=20.0)


@st.composite
def ergodic(draw):
    ap, am, bp, bm = draw(rate), draw(rate), draw(rate), draw(rate)
    p = HcParams(ap, am, bp, bm)
    assume(p.gamma_plus < 0.9 * p.gamma_minus)
    return p


def test_mu_matches_linear_solve(fitted):
    mu = A.stationary_mu(fitted)
    ref = O.stationary_from_generator(fitted, mu.K)
    assert np.abs(mu.values - ref).max() < 1e-12


def test_pi_matches_linear_solve(fitted):
    pi = A.stationary_pi(fitted)
    ref = O.stationary_jump(fitted, pi.K)
    assert np.abs(pi.values - ref).max() < 1e-12


def test_balance_residuals(fitted):
    assert np.abs(A.global_balance_residual(A.stationary_mu(fitted))).max() < 1e-10
    assert np.abs(A.embedded_balance_residual(A.stationary_pi(fitted))).max() < 1e-10


def test_first_moment_identity(fitted):
    mu = A.stationary_mu(fitted, eps=1e-10)
    s = mu.expect(lambda k: np.where(k >= 2, k, 0.0))
    assert abs(s - 2 * fitted.gamma_plus / fitted.gamma_minus) < 1e-8


def test_geometric_tail_bound(fitted):
    pi = A.stationary_pi(fitted)
    n = pi.support[1:]
    assert np.all(pi.values[1:] < n * fitted.p ** (n - 2.0) * pi[1])


def test_truncation_guards(fitted):
    with pytest.raises(ModelError):
        A.truncation_level(fitted, 0.5)
    with pytest.raises(ModelError):
        A.stationary_mu(HcParams(5, 0, 0, 4))


@given(ergodic())
@settings(max_examples=40, deadline=None)
def test_two_pi_constructions_agree(p):
    pi = A.stationary_pi(p, check=False)
    via_mu = A.pi_from_mu(A.stationary_mu(p))
    assert A.total_variation(pi.values, via_mu.values) < 1e-12
    back = A.mu_from_pi(pi)
    assert A.total_variation(back.values, A.stationary_mu(p).values) < 1e-12


@given(ergodic())
@settings(max_examples=40, deadline=None)
def test_drift_forms(p):
    gen = A.drift_D(p, "generator")
    assert math.isclose(gen, (p.alpha_plus * p.beta_plus - p.alpha_minus * p.beta_minus) / p.gamma_minus)
    assert math.isclose(A.drift_D(p, "lemma_times_jump_rate"), gen, rel_tol=1e-9, abs_tol=1e-10)
    assert math.isclose(A.mean_jump_rate(p), p.gamma - A.stationary_mu(p)[1] * p.gamma_minus, rel_tol=1e-12)


def test_drift_values(fitted):
    d = {m: A.drift_D(fitted, m) for m in A.DRIFT_METHODS}
    assert math.isclose(d["generator"], -0.4)
    assert abs(d["lemma_times_jump_rate"] + 0.4) < 1e-12
    assert abs(d["lemma_times_gamma"] - A.embedded_drift_v(fitted) * 14) < 1e-15
    # the stated and the per-jump-times-gamma forms disagree with the truth
    assert abs(d["lemma_times_gamma"] + 0.4) > 0.03 and abs(d["theorem"] + 0.4) > 1
    with pytest.raises(ModelError):
        A.drift_D(fitted, "nope")


def test_zero_drift_case():
    p = HcParams(4, 2, 1, 2)  # alpha_plus beta_plus == alpha_minus beta_minus
    assert A.drift_D(p, "generator") == 0.0
    assert abs(A.embedded_drift_v(p)) < 1e-12


@given(ergodic())
@settings(max_examples=25, deadline=None)
def test_variance_matches_enumeration(p):
    m1, m2 = O.increment_moments(p, K=A.stationary_pi(p).K)
    assert abs(A.embedded_drift_v(p) - m1) < 1e-10
    assert abs(A.clt_variance_embedded(p) - (m2 - m1 * m1)) < 1e-10


def test_variance_variants(fitted):
    var_pi = A.clt_variance_embedded(fitted)
    var_mu = A.clt_variance_embedded(fitted, first_state="mu")
    assert var_pi != var_mu
    assert math.isclose(A.clt_variance_continuous(fitted), (var_pi + A.embedded_drift_v(fitted) ** 2) * 14)
    assert A.longrun_variance_embedded(fitted) < var_pi


@pytest.mark.slow
def test_longrun_variance_monte_carlo(fitted):
    n, reps = 20_000, 400
    p = ensemble(EmbeddedTerminal(fitted, n), 21, reps).astype(float)
    var = p.var(ddof=1) / n
    target = A.longrun_variance_embedded(fitted)
    assert abs(var - target) < 3 * target * math.sqrt(2 / (reps - 1)) + 0.02


def test_next_move_prob(fitted):
    assert A.next_move_prob(fitted) == 0.5


# --------------------------------------------------------------------------- #
# Rate function and trajectories
# --------------------------------------------------------------------------- #

slopes = st.lists(st.floats(min_value=-30, max_value=30), min_size=1, max_size=6)


@given(ergodic(), slopes)
@settings(max_examples=60, deadline=None)
def test_rate_function_lower_bound(p, sl):
    f = A.PiecewiseLinearTrajectory.from_slopes(0.0, [1.0 / len(sl)] * len(sl), sl)
    val = A.rate_function(f, p).value
    assert val >= p.gamma_minus
    if all(s <= p.gamma_plus for s in sl):
        assert val == p.gamma_minus
    else:
        assert val > p.gamma_minus


def test_rate_function_boundary_slope(fitted):
    at = A.PiecewiseLinearTrajectory((0.0, 1.0), (0.0, fitted.gamma_plus))
    assert A.rate_function(at, fitted).value == fitted.gamma_minus
    down = A.PiecewiseLinearTrajectory((0.0, 0.5, 1.0), (0.0, -3.0, 1.0))
    assert A.rate_function(down, fitted).value == fitted.gamma_minus


def test_optimal_trajectory_attains_exponent(fitted):
    gp = fitted.gamma_plus
    for i in range(1, 31):
        x = 0.1 * i * gp
        f = A.optimal_spread_trajectory(x, fitted)
        assert abs(f.terminal - x) < 1e-12
        assert abs(A.rate_function(f, fitted).value - A.ldp_exponent(x, fitted)) < 1e-12


def test_exponent_shape(fitted):
    gp = fitted.gamma_plus
    xs = np.linspace(0.01, 4 * gp, 400)
    e = np.array([A.ldp_exponent(x, fitted) for x in xs])
    assert np.all(np.diff(e) >= -1e-12)
    assert np.all(e[xs <= gp] == fitted.gamma_minus)
    above = e[xs >= gp]
    assert np.all(np.diff(above, 2) >= -1e-9)
    assert abs(A.ldp_exponent(gp * (1 + 1e-9), fitted) - fitted.gamma_minus) < 1e-12


@given(rate, rate, rate, rate, st.floats(0.1, 40))
@settings(max_examples=40, deadline=None)
def test_argmin_depends_on_gammas_only(ap, am, bp, bm, x):
    a = HcParams(ap, am, bp, bm)
    # same gamma_plus, gamma_minus with a different split
    b = HcParams(bm, bp, am, ap)
    assert A.ldp_exponent(x, a) == A.ldp_exponent(x, b)
    assert A.optimal_spread_trajectory(x, a) == A.optimal_spread_trajectory(x, b)


def test_price_trajectories(fitted):
    for x in (0.2, 4.0, 20.0):
        bid, ask = A.optimal_price_trajectories(x, fitted)
        assert math.isclose(ask.terminal - bid.terminal, x)
        assert math.isclose(ask.terminal / -bid.terminal, fitted.alpha_plus / fitted.beta_minus)
        tb = A.bifurcation_time(x, fitted)
        assert ask(tb * 0.99) == 0 and bid(tb * 0.99) == 0


def test_trajectory_validation():
    with pytest.raises(ModelError):
        A.PiecewiseLinearTrajectory((0.0, 0.5), (0.0, 1.0))
    with pytest.raises(ModelError):
        A.PiecewiseLinearTrajectory((0.0, 0.7, 0.6, 1.0), (0, 0, 0, 0))
    with pytest.raises(ModelError):
        A.ldp_exponent(0.0, HcParams(5, 3, 2, 4))


# --------------------------------------------------------------------------- #
# Exact finite-horizon laws
# --------------------------------------------------------------------------- #


def test_spread_law_normalized_and_mixing(fitted):
    law = A.spread_law_at(fitted, 200.0)
    assert abs(law.sum() - 1) < 1e-11  # rounding over ~2800 steps
    mu = A.stationary_mu(fitted).values
    n = min(len(law), len(mu))
    assert A.total_variation(law[:n], mu[:n]) < 1e-10


def test_pure_birth_tail_is_poisson():
    p = HcParams(3, 0, 0, 2)
    T, x = 4.0, 6.0
    # S(T) = 1 + Poisson(5 T); P(S > x T) = P(N > xT - 1)
    expect = stats.poisson.sf(math.floor(x * T - 1), p.gamma_plus * T)
    assert math.isclose(A.spread_tail_exact(p, x, T), expect, rel_tol=1e-10)


def test_exact_tail_approaches_corrected_rate(fitted):
    x = 0.2
    limit = spread_tail_decay_rate(x, fitted)
    assert math.isclose(limit, x * math.log(fitted.gamma / fitted.gamma_plus))
    rates = [-math.log(A.spread_tail_exact(fitted, x, T)) / T for T in (100, 200, 400)]
    assert rates[0] < rates[1] < rates[2] < limit
    assert limit - rates[2] < 0.5 * (limit - rates[0])
    # the closed-form exponent is far above what finite horizons show
    assert A.ldp_exponent(x, fitted) > 20 * rates[-1]


def test_exact_tail_above_gamma_matches_closed_form(fitted):
    x = 15.0
    r = -math.log(A.spread_tail_exact(fitted, x, 100.0)) / 100.0
    assert abs(r - A.ldp_exponent(x, fitted)) / A.ldp_exponent(x, fitted) < 0.01
