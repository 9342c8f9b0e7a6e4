"""Intraday price loading, cross-market session alignment and log returns.

Bars sit on a regular session grid: ``open + k*bar_interval`` for
``k = 0 .. bars_per_day - 1``, i.e. the half-open window ``[open, close)``.
A 09:30-16:00 session with 5-minute bars therefore has 78 price points and
77 intraday returns per day. Returns never span two trading days.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from pathlib import Path
from zoneinfo import ZoneInfo

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

RETURNS_SCHEMA = "# schema: wavecontagion.returns/1"
PRICES_SCHEMA = "# schema: wavecontagion.prices/1"


@dataclass(frozen=True)
class SessionSpec:
    open: time = time(9, 30)
    close: time = time(16, 0)
    timezone: str = "Europe/Prague"
    bar_interval: timedelta = timedelta(minutes=5)

    def __post_init__(self):
        if not self.open < self.close:
            raise ValueError(f"session open {self.open} must precede close {self.close}")
        if self.bar_interval <= timedelta(0):
            raise ValueError("bar_interval must be positive")
        length = self._minutes(self.close) - self._minutes(self.open)
        step = self.bar_interval.total_seconds() / 60.0
        if not math.isclose(length / step, round(length / step)):
            raise ValueError("session length must be a whole number of bar intervals")
        try:
            ZoneInfo(self.timezone)
        except Exception as exc:
            raise ValueError(f"unknown timezone {self.timezone!r}") from exc

    @staticmethod
    def _minutes(t: time) -> float:
        return t.hour * 60 + t.minute + t.second / 60.0

    @property
    def tz(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)

    @property
    def bars_per_day(self) -> int:
        length = self._minutes(self.close) - self._minutes(self.open)
        return int(round(length / (self.bar_interval.total_seconds() / 60.0)))

    @property
    def returns_per_day(self) -> int:
        return self.bars_per_day - 1

    def bar_times(self, day: date) -> list[datetime]:
        start = datetime.combine(day, self.open, tzinfo=self.tz)
        return [start + k * self.bar_interval for k in range(self.bars_per_day)]

    def on_grid(self, ts: datetime) -> bool:
        local = ts.astimezone(self.tz)
        offset = datetime.combine(local.date(), local.time()) - datetime.combine(
            local.date(), self.open)
        if offset < timedelta(0):
            return False
        k, rem = divmod(offset, self.bar_interval)
        return rem == timedelta(0) and k < self.bars_per_day


@dataclass(frozen=True, eq=False)
class PriceSeries:
    symbol: str
    timestamps: tuple[datetime, ...]
    prices: np.ndarray

    def __post_init__(self):
        if len(self.timestamps) != len(self.prices):
            raise DataError("timestamps and prices differ in length")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise DataError(f"{self.symbol}: timestamps must be strictly increasing")
        if np.any(~(np.asarray(self.prices) > 0)):
            raise DataError(f"{self.symbol}: prices must be positive")

    def __len__(self) -> int:
        return len(self.prices)


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    symbol: str
    timestamps: tuple[datetime, ...]
    returns: np.ndarray
    day_index: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.returns)

    @property
    def n_days(self) -> int:
        return int(self.day_index.max()) + 1 if len(self.day_index) else 0


@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    mean: float
    st_dev: float
    skewness: float | None  # None when undefined (constant series)
    kurtosis: float | None
    min: float
    max: float

    def to_dict(self) -> dict:
        return {
            "n": self.n, "mean": self.mean, "st_dev": self.st_dev,
            "skewness": self.skewness, "kurtosis": self.kurtosis,
            "min": self.min, "max": self.max,
        }


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None or ts.utcoffset() is None:
        raise ValueError(f"timestamp {text!r} has no UTC offset")
    return ts


def _data_lines(handle):
    """Yield (line number, line) skipping blank and '#' comment lines."""
    for lineno, line in enumerate(handle, start=1):
        if line.strip() and not line.lstrip().startswith("#"):
            yield lineno, line


def load_price_csv(
    path, time_col: str = "timestamp", price_col: str = "price", symbol: str | None = None,
) -> PriceSeries:
    """Read a ``timestamp,price`` CSV (UTF-8, header row, ISO-8601 with offset)."""
    path = Path(path)
    symbol = symbol or path.stem
    rows: list[tuple[datetime, float, int]] = []
    try:
        with path.open("r", encoding="utf-8-sig", newline="") as fh:
            numbered = list(_data_lines(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not numbered:
        raise DataError(f"{path}: no header row")
    reader = csv.DictReader([line for _, line in numbered])
    missing = {time_col, price_col} - set(reader.fieldnames or [])
    if missing:
        raise DataError(f"{path}: missing column(s) {sorted(missing)}")
    for (lineno, _), rec in zip(numbered[1:], reader):
        try:
            ts = parse_timestamp(rec[time_col] or "")
            price = float(rec[price_col])
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: malformed row ({exc})") from None
        if not (math.isfinite(price) and price > 0):
            raise DataError(f"{path}:{lineno}: non-positive price {rec[price_col]!r}")
        rows.append((ts, price, lineno))
    rows.sort(key=lambda r: r[0])
    for a, b in zip(rows, rows[1:]):
        if a[0] == b[0]:
            raise DataError(f"{path}:{b[2]}: duplicate timestamp {b[0].isoformat()} "
                            f"(also on line {a[2]})")
    return PriceSeries(symbol, tuple(r[0] for r in rows), np.array([r[1] for r in rows]))


def align_sessions(series: list[PriceSeries], spec: SessionSpec) -> list[PriceSeries]:
    """Restrict every series to the session bars present in all of them.

    Off-grid and out-of-session bars are discarded first; a day missing from
    any one series therefore disappears from all outputs.
    """
    if not series:
        raise ValueError("align_sessions needs at least one series")
    common: set[datetime] | None = None
    for s in series:
        stamps = {t for t in s.timestamps if spec.on_grid(t)}
        common = stamps if common is None else common & stamps
    if not common:
        raise DataError("empty intersection: no session bar is shared by all series")
    out = []
    for s in series:
        keep = [i for i, t in enumerate(s.timestamps) if t in common]
        stamps = tuple(s.timestamps[i].astimezone(spec.tz) for i in keep)
        out.append(PriceSeries(s.symbol, stamps, s.prices[keep]))
    return out


def log_returns(prices: PriceSeries, spec: SessionSpec) -> ReturnSeries:
    """Intraday log returns between adjacent session bars.

    Only pairs exactly one ``bar_interval`` apart on the same local day give a
    return, stamped at the later bar. Days with fewer than two prices are
    skipped and reported in ``warnings``.
    """
    by_day: dict[date, list[int]] = defaultdict(list)
    for i, t in enumerate(prices.timestamps):
        by_day[t.astimezone(spec.tz).date()].append(i)
    logp = np.log(prices.prices)
    stamps, rets, days, notes = [], [], [], []
    ordinal = 0
    for day in sorted(by_day):
        idx = by_day[day]
        if len(idx) < 2:
            notes.append(f"{prices.symbol} {day.isoformat()}: fewer than 2 prices, day skipped")
            continue
        produced = 0
        for a, b in zip(idx, idx[1:]):
            if prices.timestamps[b] - prices.timestamps[a] != spec.bar_interval:
                continue
            stamps.append(prices.timestamps[b].astimezone(spec.tz))
            rets.append(logp[b] - logp[a])
            days.append(ordinal)
            produced += 1
        if produced:
            ordinal += 1
        else:
            notes.append(f"{prices.symbol} {day.isoformat()}: no adjacent bars, day skipped")
    for note in notes:
        log.warning(note)
    if not rets:
        raise DataError(f"{prices.symbol}: no intraday returns could be formed")
    return ReturnSeries(prices.symbol, tuple(stamps), np.array(rets),
                        np.array(days, dtype=int), tuple(notes))


def descriptive_stats(series) -> DescriptiveStats:
    """Mean, sample st.dev (n-1), moment skewness, raw kurtosis, min, max."""
    x = np.asarray(series.returns if isinstance(series, ReturnSeries) else series, dtype=float)
    if len(x) < 2:
        raise DataError("descriptive statistics need at least 2 observations")
    lo, hi = float(x.min()), float(x.max())
    mean = min(max(float(x.mean()), lo), hi)
    d = x - x.mean()
    m2 = float(np.mean(d**2))
    sd = float(np.std(x, ddof=1))
    if m2 == 0.0 or lo == hi:
        return DescriptiveStats(len(x), mean, 0.0, None, None, lo, hi)
    skew = float(np.mean(d**3)) / m2**1.5
    kurt = float(np.mean(d**4)) / m2**2
    return DescriptiveStats(len(x), mean, sd, skew, kurt, lo, hi)


def write_returns_csv(series: ReturnSeries, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(RETURNS_SCHEMA + "\n")
        fh.write("timestamp,return,day_index\n")
        for t, r, d in zip(series.timestamps, series.returns, series.day_index):
            fh.write(f"{t.isoformat()},{float(r)!r},{int(d)}\n")


def read_returns_csv(path, symbol: str | None = None) -> ReturnSeries:
    path = Path(path)
    stamps, rets, days = [], [], []
    try:
        with path.open("r", encoding="utf-8-sig", newline="") as fh:
            numbered = list(_data_lines(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    reader = csv.DictReader([line for _, line in numbered])
    if not {"timestamp", "return", "day_index"} <= set(reader.fieldnames or []):
        raise DataError(f"{path}: expected columns timestamp,return,day_index")
    for (lineno, _), rec in zip(numbered[1:], reader):
        try:
            stamps.append(parse_timestamp(rec["timestamp"]))
            rets.append(float(rec["return"]))
            days.append(int(rec["day_index"]))
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: malformed row ({exc})") from None
    if not rets:
        raise DataError(f"{path}: no returns")
    return ReturnSeries(symbol or path.stem, tuple(stamps), np.array(rets),
                        np.array(days, dtype=int))


def write_prices_csv(series: PriceSeries, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(PRICES_SCHEMA + "\n")
        fh.write("timestamp,price\n")
        for t, p in zip(series.timestamps, series.prices):
            fh.write(f"{t.isoformat()},{float(p)!r}\n")
