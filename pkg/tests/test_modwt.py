import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavecontagion.errors import DataError
from wavecontagion.modwt import (
    FILTERS,
    ModwtDecomposition,
    boundary_mask,
    equivalent_length,
    get_filter,
    horizon_label,
    imodwt,
    modwt,
    scale_to_horizon,
)
from wavecontagion.synth import direct_modwt_oracle

NAMES = ["haar", "d4", "la8"]


@pytest.mark.parametrize("name", NAMES)
def test_filter_properties(name):
    f = FILTERS[name]
    assert np.sum(f.g) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert np.sum(f.h) == pytest.approx(0.0, abs=1e-12)
    assert f.g @ f.g == pytest.approx(1.0, abs=1e-12)
    assert f.h @ f.h == pytest.approx(1.0, abs=1e-12)
    # orthogonal to even shifts
    L = f.length
    for k in range(2, L, 2):
        assert f.g[k:] @ f.g[: L - k] == pytest.approx(0.0, abs=1e-12)
        assert f.h[k:] @ f.g[: L - k] == pytest.approx(0.0, abs=1e-12)


def test_filter_lookup():
    assert get_filter("LA(8)") is FILTERS["la8"]
    assert get_filter("db1") is FILTERS["haar"]
    assert get_filter(FILTERS["d4"]) is FILTERS["d4"]
    with pytest.raises(ValueError):
        get_filter("coif3")


def test_constant_series_haar_level_one_is_zero():
    d = modwt(np.full(16, 4.2), "haar", 1)
    np.testing.assert_allclose(d.w[0], 0.0, atol=1e-15)
    np.testing.assert_allclose(d.v, 4.2)


def test_zero_series():
    d = modwt(np.zeros(40), "la8", 3)
    assert all(np.all(w == 0) for w in d.w) and np.all(d.v == 0)
    zero = ModwtDecomposition([np.zeros(40)] * 3, np.zeros(40), FILTERS["la8"])
    assert np.all(imodwt(zero) == 0)


def test_haar_hand_example():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    d = modwt(x, "haar", 1)
    # w[t] = (x[t] - x[t-1]) / 2 and v[t] = (x[t] + x[t-1]) / 2, circularly
    np.testing.assert_allclose(d.w[0], [(1 - 4) / 2, 0.5, 0.5, 0.5])
    np.testing.assert_allclose(d.v, [2.5, 1.5, 2.5, 3.5])
    np.testing.assert_allclose(imodwt(d), x, atol=1e-14)


@pytest.mark.parametrize("name", NAMES)
def test_matches_direct_filtering(name):
    x = np.random.default_rng(0).standard_normal(300)
    fast = modwt(x, name, 4)
    slow = direct_modwt_oracle(x, name, 4)
    for a, b in zip(fast.w, slow.w):
        np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(fast.v, slow.v, atol=1e-12)


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("n", [300, 500, 512, 1000])
def test_energy_and_round_trip(name, n):
    x = np.random.default_rng(n).standard_normal(n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = modwt(x, name, 8)
    energy = sum(w @ w for w in d.w) + d.v @ d.v
    assert energy == pytest.approx(x @ x, rel=1e-10)
    assert np.max(np.abs(imodwt(d) - x)) < 1e-8


def test_warns_when_levels_exceed_length():
    with pytest.warns(UserWarning):
        modwt(np.arange(10.0), "haar", 5)


@pytest.mark.parametrize("bad", [np.array([]), np.array([1.0]), np.ones((3, 3))])
def test_rejects_degenerate_input(bad):
    with pytest.raises(DataError):
        modwt(bad, "haar", 1)


def test_equivalent_length_and_boundary_masks():
    assert equivalent_length(2, 1) == 2
    assert boundary_mask(100, "haar", 1).tolist() == [0]
    assert equivalent_length(2, 3) == 8
    assert boundary_mask(100, "haar", 3).tolist() == list(range(7))
    assert equivalent_length(8, 2) == 22
    assert boundary_mask(100, "la8", 2).tolist() == list(range(21))
    assert boundary_mask(10, "la8", 4).tolist() == list(range(10))


def test_boundary_mask_marks_wraparound_exactly():
    # coefficients outside the mask must not depend on the circular wrap
    n, j = 200, 3
    rng = np.random.default_rng(2)
    x = rng.standard_normal(n)
    padded = np.concatenate([rng.standard_normal(n), x])
    d1 = modwt(x, "la8", j)
    d2 = modwt(padded, "la8", j)
    mask = np.zeros(n, dtype=bool)
    mask[boundary_mask(n, "la8", j)] = True
    np.testing.assert_allclose(d1.w[j - 1][~mask], d2.w[j - 1][n:][~mask], atol=1e-12)
    assert not np.allclose(d1.w[j - 1][mask], d2.w[j - 1][n:][mask])


def test_horizon_bands():
    assert scale_to_horizon(1, 5.0)[1] == (10.0, 20.0)
    assert scale_to_horizon(3, 5.0)[1] == (40.0, 80.0)
    assert scale_to_horizon(8, 5.0)[1] == (1280.0, 2560.0)
    assert scale_to_horizon(2)[0] == (0.125, 0.25)
    assert horizon_label(1) == "10min-20min"
    assert horizon_label(3) == "40min-1.33h"
    assert horizon_label(8).endswith("d")
    assert 2560 / 385 > 3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 300), st.sampled_from(NAMES), st.integers(1, 6))
def test_round_trip_property(seed, n, name, J):
    x = np.random.default_rng(seed).standard_normal(n) * 10
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = modwt(x, name, J)
    np.testing.assert_allclose(imodwt(d), x, atol=1e-9)
    energy = sum(w @ w for w in d.w) + d.v @ d.v
    assert energy == pytest.approx(x @ x, rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(16, 128), st.integers(0, 127))
def test_shift_covariance(seed, n, k):
    x = np.random.default_rng(seed).standard_normal(n)
    d = modwt(x, "d4", 3)
    ds = modwt(np.roll(x, k), "d4", 3)
    for a, b in zip(d.w, ds.w):
        np.testing.assert_allclose(np.roll(a, k), b, atol=1e-12)
