import math
from datetime import date, datetime, time, timedelta
from zoneinfo import ZoneInfo

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavecontagion.errors import DataError
from wavecontagion.ingest import (
    PriceSeries,
    SessionSpec,
    align_sessions,
    descriptive_stats,
    load_price_csv,
    log_returns,
    parse_timestamp,
    read_returns_csv,
    write_prices_csv,
    write_returns_csv,
)

SPEC = SessionSpec()
CET = ZoneInfo("Europe/Prague")


def bar(day: date, hh: int, mm: int) -> datetime:
    return datetime(day.year, day.month, day.day, hh, mm, tzinfo=CET)


def write(path, rows, header="timestamp,price"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return path


def full_day(day, price=100.0):
    return [(t, price * math.exp(0.001 * k)) for k, t in enumerate(SPEC.bar_times(day))]


def series(symbol, rows):
    return PriceSeries(symbol, tuple(t for t, _ in rows), np.array([p for _, p in rows]))


def test_session_geometry():
    assert SPEC.bars_per_day == 78
    assert SPEC.returns_per_day == 77
    times = SPEC.bar_times(date(2008, 3, 3))
    assert times[0].time() == time(9, 30) and times[-1].time() == time(15, 55)
    assert SPEC.on_grid(bar(date(2008, 3, 3), 15, 55))
    assert not SPEC.on_grid(bar(date(2008, 3, 3), 16, 0))
    assert not SPEC.on_grid(bar(date(2008, 3, 3), 9, 32))


@pytest.mark.parametrize("kwargs", [
    dict(open=time(16, 0), close=time(9, 30)),
    dict(bar_interval=timedelta(minutes=7)),
    dict(timezone="Mars/Olympus"),
])
def test_session_validation(kwargs):
    with pytest.raises(ValueError):
        SessionSpec(**kwargs)


def test_load_two_rows(tmp_path):
    p = write(tmp_path / "PX.csv", ["2008-01-02T09:30:00+01:00,100.5",
                                    "2008-01-02T09:35:00+01:00,101.0"])
    s = load_price_csv(p)
    assert s.symbol == "PX" and len(s) == 2
    assert s.prices.tolist() == [100.5, 101.0]


def test_negative_price_names_line(tmp_path):
    p = write(tmp_path / "x.csv", ["2008-01-02T09:30:00+01:00,100", "2008-01-02T09:35:00+01:00,-1.0"])
    with pytest.raises(DataError, match=r"x\.csv:3"):
        load_price_csv(p)


@pytest.mark.parametrize("row", ["2008-01-02T09:30:00,100", "garbage,100", "2008-01-02T09:30:00Z,abc"])
def test_malformed_rows(tmp_path, row):
    with pytest.raises(DataError):
        load_price_csv(write(tmp_path / "x.csv", [row]))


def test_missing_column_and_duplicates(tmp_path):
    with pytest.raises(DataError, match="missing"):
        load_price_csv(write(tmp_path / "a.csv", ["2008-01-02T09:30:00Z,1"], "time,close"))
    rows = ["2008-01-02T09:30:00+01:00,1", "2008-01-02T08:30:00Z,2"]
    with pytest.raises(DataError, match="duplicate"):
        load_price_csv(write(tmp_path / "b.csv", rows))


def test_shuffled_input_equals_sorted(tmp_path):
    rows = [f"{t.isoformat()},{p!r}" for t, p in full_day(date(2008, 1, 2))]
    shuffled = list(np.random.default_rng(0).permutation(rows))
    a = load_price_csv(write(tmp_path / "a.csv", rows))
    b = load_price_csv(write(tmp_path / "b.csv", shuffled))
    assert a.timestamps == b.timestamps
    assert np.array_equal(a.prices, b.prices)


def test_comments_and_custom_columns(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("# exported\nwhen,close\n\n2008-01-02T08:30:00Z,5\n", encoding="utf-8")
    s = load_price_csv(p, "when", "close", symbol="C")
    assert s.symbol == "C" and s.timestamps[0] == bar(date(2008, 1, 2), 9, 30)


def test_parse_timestamp():
    assert parse_timestamp("2008-09-16T09:30:00Z").utcoffset() == timedelta(0)
    with pytest.raises(ValueError):
        parse_timestamp("2008-09-16T09:30:00")


def test_align_identical_is_unchanged():
    rows = full_day(date(2008, 1, 2))
    a, b = align_sessions([series("A", rows), series("B", rows)], SPEC)
    assert a.timestamps == tuple(t for t, _ in rows)
    assert np.array_equal(b.prices, np.array([p for _, p in rows]))


def test_align_drops_day_missing_from_one_series():
    d1, d2 = date(2008, 1, 2), date(2008, 1, 3)
    a = series("A", full_day(d1) + full_day(d2))
    b = series("B", full_day(d1))
    out = align_sessions([a, b], SPEC)
    assert all({t.date() for t in s.timestamps} == {d1} for s in out)


def test_align_restricts_to_common_session():
    d = date(2008, 1, 2)
    wide = [(bar(d, 9, 0) + k * timedelta(minutes=5), 100.0 + k) for k in range(102)]  # 9:00-17:25
    narrow = full_day(d)
    wide_spec = SessionSpec(time(9, 0), time(17, 30))
    a, b = align_sessions([series("A", wide), series("B", narrow)], wide_spec)
    assert a.timestamps[0] == bar(d, 9, 30) and a.timestamps[-1] == bar(d, 15, 55)
    assert len(a) == len(b) == 78


def test_align_disjoint_is_an_error():
    a = series("A", full_day(date(2008, 1, 2)))
    b = series("B", full_day(date(2008, 1, 3)))
    with pytest.raises(DataError, match="empty intersection"):
        align_sessions([a, b], SPEC)


def test_align_converts_time_zones():
    d = date(2008, 1, 2)
    rows = full_day(d)
    utc = [(t.astimezone(ZoneInfo("UTC")), p) for t, p in rows]
    a, b = align_sessions([series("A", rows), series("B", utc)], SPEC)
    assert len(a) == len(b) == 78


def test_returns_examples():
    d = date(2008, 1, 2)
    r = log_returns(series("A", [(bar(d, 9, 30), 100.0), (bar(d, 9, 35), 100.0)]), SPEC)
    assert r.returns.tolist() == [0.0]
    r = log_returns(series("A", [(bar(d, 9, 30), 100.0), (bar(d, 9, 35), 100 * math.exp(0.01))]), SPEC)
    assert r.returns[0] == pytest.approx(0.01, abs=1e-15)


def test_no_overnight_returns():
    d1, d2 = date(2008, 1, 2), date(2008, 1, 3)
    rows = [(bar(d1, 15, 50), 100.0), (bar(d1, 15, 55), 101.0),
            (bar(d2, 9, 30), 120.0), (bar(d2, 9, 35), 121.0)]
    r = log_returns(series("A", rows), SPEC)
    assert len(r) == 2
    assert r.day_index.tolist() == [0, 1]
    assert r.returns[1] == pytest.approx(math.log(121 / 120))


def test_intraday_gap_and_short_day():
    d1, d2 = date(2008, 1, 2), date(2008, 1, 3)
    rows = [(bar(d1, 9, 30), 1.0), (bar(d1, 9, 35), 1.1), (bar(d1, 9, 45), 1.2), (bar(d1, 9, 50), 1.3),
            (bar(d2, 9, 30), 1.0)]
    r = log_returns(series("A", rows), SPEC)
    assert len(r) == 2  # the 9:35 -> 9:45 jump spans a missing bar
    assert any("fewer than 2 prices" in w for w in r.warnings)


def test_full_days_give_77_returns_each():
    rows = [row for k in range(3) for row in full_day(date(2008, 1, 2) + timedelta(days=k))]
    r = log_returns(series("A", rows), SPEC)
    assert len(r) == 3 * 77
    assert np.bincount(r.day_index).tolist() == [77, 77, 77]


def test_descriptive_examples():
    s = descriptive_stats([1.0, -1.0, 1.0, -1.0])
    assert s.mean == 0.0 and s.skewness == 0.0
    assert s.st_dev == pytest.approx(math.sqrt(4 / 3))
    z = descriptive_stats([0.0, 0.0, 0.0])
    assert z.st_dev == 0.0 and z.skewness is None and z.kurtosis is None
    with pytest.raises(DataError):
        descriptive_stats([1.0])


def test_normal_kurtosis():
    s = descriptive_stats(np.random.default_rng(0).standard_normal(1_000_000))
    assert s.kurtosis == pytest.approx(3.0, abs=0.05)
    assert abs(s.skewness) < 0.01


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=50), st.floats(0.01, 100), st.floats(-100, 100))
def test_stats_affine_invariance(xs, a, b):
    x = np.array(xs)
    s = descriptive_stats(x)
    t = descriptive_stats(a * x + b)
    assert s.min <= s.mean <= s.max
    if s.skewness is None or s.st_dev < 1e-6 * max(1.0, np.max(np.abs(x))):
        return
    assert t.st_dev == pytest.approx(a * s.st_dev, rel=1e-6)
    assert t.skewness == pytest.approx(s.skewness, rel=1e-5, abs=1e-6)
    assert t.kurtosis == pytest.approx(s.kurtosis, rel=1e-5)
    assert t.kurtosis >= 1.0 - 1e-9


def test_returns_csv_round_trip(tmp_path):
    rows = [row for k in range(2) for row in full_day(date(2008, 1, 2) + timedelta(days=k))]
    r = log_returns(series("A", rows), SPEC)
    write_returns_csv(r, tmp_path / "A_returns.csv")
    text = (tmp_path / "A_returns.csv").read_text()
    assert text.startswith("# schema: wavecontagion.returns/1\n")
    back = read_returns_csv(tmp_path / "A_returns.csv", "A")
    assert back.timestamps == r.timestamps
    assert np.array_equal(back.returns, r.returns)
    assert np.array_equal(back.day_index, r.day_index)


def test_prices_csv_round_trip(tmp_path):
    s = series("A", full_day(date(2008, 1, 2)))
    write_prices_csv(s, tmp_path / "A.csv")
    back = load_price_csv(tmp_path / "A.csv")
    assert back.timestamps == s.timestamps and np.array_equal(back.prices, s.prices)
