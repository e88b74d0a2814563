from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lobfluct.model import (
    ASK,
    BID,
    DOWN,
    UP,
    BookState,
    CatastropheDist,
    HcParams,
    LlgParams,
    ModelError,
    Move,
    NcParams,
    RegimeSpec,
    hc_rates,
    llg_rates,
    nc_rates,
    spread_law,
    truncated_geometric_pmf,
)

rates = st.floats(min_value=0.01, max_value=50.0)


def test_derived_rates(fitted):
    assert fitted.gamma_plus == 9 and fitted.gamma_minus == 5 and fitted.gamma == 14
    assert math.isclose(fitted.p + fitted.q, 1.0)
    assert fitted.as_tuple() == (5.0, 3.0, 2.0, 4.0)


@pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
def test_rejects_bad_rates(bad):
    with pytest.raises(ModelError):
        HcParams(bad, 1, 1, 1)


def test_llg_theta_open_interval():
    for theta in (0.0, 1.0, 1.5):
        with pytest.raises(ModelError):
            LlgParams(1, 1, 1, 1, 0.5, 0.5, theta)


def test_book_state_invariant():
    assert BookState(-3, 2).spread == 5
    for b, a in ((1, 1), (2, 1)):
        with pytest.raises(ModelError):
            BookState(b, a)
    with pytest.raises(ModelError):
        BookState(0.5, 2)


def test_hc_rates_at_spread_one(fitted):
    law = hc_rates(BookState(0, 1), fitted)
    assert law.total_rate == fitted.gamma_plus
    assert law.class_rate(ASK, DOWN) == 0 and law.class_rate(BID, UP) == 0
    assert law.rate(ASK, UP, 1) == 5 and law.rate(BID, DOWN, 1) == 4


def test_hc_rates_uniform_closing(fitted):
    law = hc_rates(BookState(10, 15), fitted)
    assert math.isclose(law.listed_rate, fitted.gamma)
    for d in range(1, 5):
        assert math.isclose(law.rate(ASK, DOWN, d), 3 / 4)
        assert math.isclose(law.rate(BID, UP, d), 2 / 4)
    assert law.rate(ASK, DOWN, 5) == 0


def test_move_apply_and_spread_change():
    s = BookState(10, 12)
    assert Move(ASK, UP, 1).apply(s) == BookState(10, 13)
    assert Move(BID, UP, 1).apply(s) == BookState(11, 12)
    assert Move(BID, DOWN, 2).spread_change == 2
    assert Move(ASK, DOWN, 1).spread_change == -1
    with pytest.raises(ModelError):
        Move(BID, UP, 2).apply(s)


def test_spread_law_marginal_matches_book(fitted):
    regime = RegimeSpec(fitted)
    for k in (1, 2, 7):
        book = hc_rates(BookState(0, k), fitted).spread_marginal()
        spread = {m.spread_change: r for m, r in spread_law(k, regime)}
        assert book.keys() == spread.keys()
        for key in book:
            assert math.isclose(book[key], spread[key])


def test_nc_rates_power_law():
    p = NcParams(1, 2, 3, 4, mu_exp=1.5)
    law = nc_rates(BookState(0, 4), p)
    assert math.isclose(law.rate(ASK, DOWN, 2), 2 * 2 ** -1.5)
    assert math.isclose(law.total_rate, 1 + 4 + 5 * (1 + 2 ** -1.5 + 3 ** -1.5))
    assert math.isclose(RegimeSpec(p).exit_rate(4), law.total_rate)


def test_llg_rates_tail_accounting():
    p = LlgParams(2, 1, 1, 2, kappa_a=0.5, kappa_b=1.0, theta=0.3)
    law = llg_rates(BookState(0, 4), p, max_listed_delta=20)
    assert math.isclose(law.listed_rate + law.unlisted_rate, law.total_rate, rel_tol=1e-12)
    assert math.isclose(law.class_rate(ASK, UP) + law.class_rate(BID, DOWN) + law.unlisted_rate,
                        2 / 2 + 2 / 4, rel_tol=1e-12)


def test_truncated_geometric_normalized():
    for k in (2, 3, 30):
        pmf = truncated_geometric_pmf(0.4, k)
        assert len(pmf) == k - 1 and math.isclose(pmf.sum(), 1.0)


def test_two_part_catastrophe_bound_and_sampling():
    cat = CatastropheDist.two_part(0.5, 0.7)
    for k in (2, 3, 10, 101):
        q = cat.probs(k)
        assert math.isclose(q.sum(), 1.0)
        assert cat.bound_holds(k)
        # a fine grid of uniforms through the inverse CDF reproduces the pmf
        n = 20_000
        u = (np.arange(n) + 0.5) / n
        counts = np.bincount([cat.sample(k, x) for x in u], minlength=k)[1:]
        assert np.abs(counts / n - q).max() <= 1.0 / n


def test_catastrophe_bound_violation_rejected():
    with pytest.raises(ModelError):
        CatastropheDist.two_part(0.5, 0.7, c=1.1)


def test_custom_catastrophe_not_serializable():
    cat = CatastropheDist.almost_uniform(lambda k: np.ones(k - 1), c=1.01)
    assert not cat.kernel_supported
    with pytest.raises(ModelError):
        cat.to_dict()


@given(rates, rates, rates, rates)
@settings(max_examples=50, deadline=None)
def test_regime_round_trip(ap, am, bp, bm):
    spec = RegimeSpec.hc(ap, am, bp, bm, CatastropheDist.two_part(0.4, 0.6))
    assert RegimeSpec.from_dict(spec.to_dict()) == spec


@given(rates, rates, rates, rates, st.integers(1, 60))
@settings(max_examples=60, deadline=None)
def test_exit_rate_equals_listed_rate(ap, am, bp, bm, k):
    p = HcParams(ap, am, bp, bm)
    law = hc_rates(BookState(0, k), p)
    assert math.isclose(law.listed_rate, law.total_rate, rel_tol=1e-12)
    assert math.isclose(RegimeSpec(p).exit_rate(k), law.total_rate, rel_tol=1e-12)


@given(st.integers(2, 200), st.floats(0, 1, exclude_max=True))
def test_uniform_sample_in_range(k, u):
    d = CatastropheDist.uniform().sample(k, u)
    assert 1 <= d <= k - 1


def test_from_dict_errors():
    with pytest.raises(ModelError):
        RegimeSpec.from_dict({"regime": "xx"})
    with pytest.raises(ModelError):
        RegimeSpec.from_dict({"regime": "hc", "alpha_plus": 1})
    with pytest.raises(ModelError):
        RegimeSpec.from_dict({"regime": "hc", "alpha_plus": 1, "alpha_minus": 1, "beta_plus": 1, "beta_minus": 1, "zz": 1})
    with pytest.raises(ModelError):
        RegimeSpec(NcParams(1, 1, 1, 1, 1), CatastropheDist.two_part())
