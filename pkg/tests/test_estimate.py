from __future__ import annotations

import io
import json
import math

import numpy as np
import pytest

from lobfluct import analytics as A
from lobfluct.estimate import EventLog, EventLogError, estimate_from_counts, estimate_rates, parse_event_log
from lobfluct.model import BookState, LlgParams, RegimeSpec
from lobfluct.simulate import simulate_book


def _log(text: str, **kw) -> EventLog:
    return parse_event_log(io.StringIO(text), **kw)


def test_round_trip_simulated_log(fitted):
    path = simulate_book(RegimeSpec(fitted), BookState(100, 101), 300.0, seed=3)
    parsed = _log(path.to_csv(), T_obs=300.0)
    assert parsed == EventLog.from_path(path)


def test_round_trip_without_book_columns():
    log = _log("t,side,direction,delta\n0.5,ask,up,1\n0.7,bid,up,2\n")
    assert len(log) == 2 and log.bids is None and log.T_obs == 0.7


@pytest.mark.parametrize(
    "body, line",
    [
        ("0.5,ask,up,1\n0.7,bid,up,0\n", 3),
        ("0.5,ask,up,1\n0.4,bid,up,1\n", 3),
        ("0.5,ask,sideways,1\n", 2),
        ("0.5,ask,up\n", 2),
        ("abc,ask,up,1\n", 2),
        ("-1,ask,up,1\n", 2),
    ],
)
def test_bad_rows_report_line(body, line):
    with pytest.raises(EventLogError) as exc:
        _log("t,side,direction,delta\n" + body)
    assert exc.value.line == line


def test_bad_book_state_rejected():
    with pytest.raises(EventLogError) as exc:
        _log("t,side,direction,delta,bid,ask\n0.1,ask,down,1,3,3\n")
    assert exc.value.line == 2


def test_empty_and_header_errors():
    with pytest.raises(EventLogError):
        _log("")
    with pytest.raises(EventLogError):
        _log("t,side,direction,delta\n")
    with pytest.raises(EventLogError):
        _log("time,side,direction,delta\n0.1,ask,up,1\n")


def test_t_obs_before_last_event():
    with pytest.raises(EventLogError):
        _log("t,side,direction,delta\n5.0,ask,up,1\n", T_obs=4.0)


def test_zero_duration_rejected():
    with pytest.raises(EventLogError):
        estimate_rates(_log("t,side,direction,delta\n0.0,ask,up,1\n"))


def test_fitted_values_from_counts():
    counts = {"alpha_plus": 4500, "alpha_minus": 2700, "beta_plus": 1800, "beta_minus": 3600}
    est = estimate_from_counts(counts, 900.0)
    assert est.rates == (5.0, 3.0, 2.0, 4.0)
    assert est.std_errors["alpha_plus"] == math.sqrt(4500) / 900


def test_counts_classified_per_event():
    log = _log("t,side,direction,delta\n1,ask,up,1\n2,ask,down,3\n3,bid,up,2\n4,bid,down,1\n5,ask,up,1\n")
    est = estimate_rates(log)
    assert est.counts == {"alpha_plus": 2, "alpha_minus": 1, "beta_plus": 1, "beta_minus": 1}
    assert est.rates == (0.4, 0.2, 0.2, 0.2)
    assert est.max_delta == 3 and est.model_mismatch


def test_empty_side():
    est = estimate_rates(_log("t,side,direction,delta\n1,ask,up,1\n2,ask,down,1\n", T_obs=10))
    assert est.beta_plus_hat == 0 and est.beta_minus_hat == 0
    assert est.std_errors["beta_plus"] == 0 and est.std_errors["beta_minus"] == 0


def test_json_output():
    est = estimate_from_counts({"alpha_plus": 9}, 3.0)
    d = json.loads(est.to_json())
    assert d["rates"]["alpha_plus"] == 3.0 and d["counts"]["beta_minus"] == 0


def test_llg_log_flagged_mismatched():
    path = simulate_book(RegimeSpec(LlgParams(5, 3, 2, 4, 0.2, 0.2, 0.3)), BookState(0, 1), 200.0, seed=1)
    assert estimate_rates(EventLog.from_path(path)).model_mismatch


def test_closing_rates_measure_exposure(fitted):
    # counts of closings only accrue while the spread exceeds one tick
    T = 10_000.0
    est = estimate_rates(EventLog.from_path(simulate_book(RegimeSpec(fitted), BookState(0, 1), T, seed=5)))
    open_frac = 1 - A.stationary_mu(fitted)[1]
    for name, truth in (("alpha_minus", 3.0), ("beta_plus", 2.0)):
        hat = getattr(est, name + "_hat")
        assert abs(hat - truth * open_frac) < 4 * est.std_errors[name]
    for name, truth in (("alpha_plus", 5.0), ("beta_minus", 4.0)):
        assert abs(getattr(est, name + "_hat") - truth) < 4 * est.std_errors[name]


def test_standard_error_scaling(fitted):
    ratios = []
    for T in (2_000.0, 8_000.0):
        est = estimate_rates(EventLog.from_path(simulate_book(RegimeSpec(fitted), BookState(0, 1), T, seed=2)))
        ratios.append(est.std_errors["alpha_plus"] / est.alpha_plus_hat)
    assert abs(ratios[0] / ratios[1] - 2.0) < 0.1
