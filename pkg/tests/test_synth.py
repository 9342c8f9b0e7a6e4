from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavecontagion.ingest import SessionSpec, log_returns
from wavecontagion.modwt import get_filter
from wavecontagion.synth import (
    SeedSpec,
    _population_rho,
    _squared_gains,
    business_days,
    calibrate_mixing,
    gen_ar1,
    gen_correlated_pair,
    session_prices,
)
from wavecontagion.wcorr import wavelet_correlation


def test_seed_streams_are_independent_of_draw_order():
    a = SeedSpec(5, 3).generator().standard_normal(10)
    SeedSpec(5, 2).generator().standard_normal(1000)
    b = SeedSpec(5, 3).generator().standard_normal(10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, SeedSpec(5, 4).generator().standard_normal(10))
    with pytest.raises(ValueError):
        SeedSpec(-1)


def test_ar1_white_variance():
    x = gen_ar1(100_000, 0.0, 2.0, SeedSpec(1))
    assert np.var(x) == pytest.approx(4.0, rel=0.03)


def test_ar1_stationary_variance_and_lag_one():
    x = gen_ar1(100_000, 0.9, 1.0, SeedSpec(2))
    assert np.var(x) == pytest.approx(1.0 / (1 - 0.81), rel=0.05)
    d = x - x.mean()
    assert (d[1:] @ d[:-1]) / (d @ d) == pytest.approx(0.9, abs=0.01)


def test_ar1_starts_stationary():
    # the first draw already has the stationary variance
    first = np.array([gen_ar1(3, 0.9, 1.0, SeedSpec(7, i))[0] for i in range(4000)])
    assert np.var(first) == pytest.approx(1.0 / (1 - 0.81), rel=0.1)


def test_ar1_deterministic_and_validated():
    assert np.array_equal(gen_ar1(500, 0.3, 1.0, 9), gen_ar1(500, 0.3, 1.0, 9))
    with pytest.raises(ValueError):
        gen_ar1(10, 1.0)


def test_unit_correlation_reconstructs_x():
    x, y = gen_correlated_pair(3000, [1.0] * 6, "la8", 4)
    assert np.max(np.abs(x - y)) <= 1e-8


def test_zero_targets_give_near_zero_correlation():
    x, y = gen_correlated_pair(20_000, [0.0] * 8, "la8", 0)
    wc = wavelet_correlation(x, y, "la8", 8)
    assert np.all(np.abs(wc.rho[:5]) <= 0.05)
    # coarse levels keep few independent coefficients (sampling st.dev of
    # 0.04 and more), so they are held to their own confidence interval
    assert np.all((wc.ci_low[5:] <= 0) & (0 <= wc.ci_high[5:]))


def test_scale_one_target_only():
    x, y = gen_correlated_pair(20_000, [0.8] + [0.0] * 7, "la8", 1)
    assert 0.75 <= wavelet_correlation(x, y, "la8", 8).at(1) <= 0.85


@pytest.mark.parametrize("name", ["haar", "d4", "la8"])
def test_calibration_hits_population_targets(name):
    target = np.array([0.8, 0.5, 0.2, 0.0, -0.3])
    f = get_filter(name)
    mix = calibrate_mixing(target, f)
    got = _population_rho(mix, _squared_gains(f, len(target)))
    np.testing.assert_allclose(got, target, atol=1e-8)
    assert np.all(np.abs(mix) <= 1)


def test_correlated_pair_rejects_bad_targets():
    with pytest.raises(ValueError):
        gen_correlated_pair(100, [1.5], "haar", 0)
    with pytest.raises(ValueError):
        gen_correlated_pair(100, [], "haar", 0)


def test_business_days_skip_weekends():
    days = business_days(date(2008, 1, 4), 3)  # a Friday
    assert days == [date(2008, 1, 4), date(2008, 1, 7), date(2008, 1, 8)]


def test_session_prices_round_trip_returns():
    spec = SessionSpec()
    rng = np.random.default_rng(0)
    rets = rng.standard_normal((2, 3 * 77)) * 1e-3
    prices = session_prices(rets, spec, date(2008, 1, 2), ["A", "B"], seed=1)
    assert [p.symbol for p in prices] == ["A", "B"]
    assert len(prices[0]) == 3 * 78
    back = log_returns(prices[0], spec)
    np.testing.assert_allclose(back.returns, rets[0], atol=1e-12)
    with pytest.raises(ValueError):
        session_prices(rets[:, :100], spec, date(2008, 1, 2), ["A", "B"])


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=6), st.sampled_from(["haar", "la8"]))
def test_calibration_property(weights, name):
    # any target produced by some mixing vector must be recovered
    f = get_filter(name)
    rho = _population_rho(np.array(weights), _squared_gains(f, len(weights)))
    mix = calibrate_mixing(rho, f)
    got = _population_rho(mix, _squared_gains(f, len(rho)))
    np.testing.assert_allclose(got, rho, atol=1e-6)
