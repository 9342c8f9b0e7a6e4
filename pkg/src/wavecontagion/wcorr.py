"""Scale-by-scale wavelet correlation and the two-window contagion test."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DataError, NumericError
from .modwt import WaveletFilter, equivalent_length, get_filter, modwt

log = logging.getLogger(__name__)

MIN_COEFFICIENTS = 4


@dataclass(frozen=True, eq=False)
class WaveletCorrelation:
    levels: np.ndarray
    rho: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_eff: np.ndarray  # non-boundary coefficients used
    n_hat: np.ndarray  # n_eff / 2**j, the decorrelated sample size
    alpha: float
    filter_name: str

    def at(self, j: int) -> float:
        return float(self.rho[list(self.levels).index(j)])


@dataclass(frozen=True, eq=False)
class ContagionReport:
    break_index: int
    window_length: int
    levels: np.ndarray
    rho_I: np.ndarray
    rho_II: np.ndarray
    ci_I: tuple[np.ndarray, np.ndarray]
    ci_II: tuple[np.ndarray, np.ndarray]
    z: np.ndarray
    p_value: np.ndarray
    reject: np.ndarray
    alpha: float
    filter_name: str

    @property
    def change(self) -> list[str]:
        return ["increase" if d > 0 else "decrease" if d < 0 else "none"
                for d in self.rho_II - self.rho_I]


def fisher_ci(rho: float, n_hat: float, alpha: float) -> tuple[float, float]:
    """``tanh(atanh(rho) -+ z_{1-alpha/2} / sqrt(n_hat - 3))``; (-1, 1) if n_hat <= 3."""
    if n_hat <= 3:
        return -1.0, 1.0
    half = norm.ppf(1.0 - alpha / 2.0) / math.sqrt(n_hat - 3.0)
    with np.errstate(divide="ignore"):
        z = np.arctanh(rho)
    return float(np.tanh(z - half)), float(np.tanh(z + half))


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise DataError(f"series lengths differ: {x.shape} vs {y.shape}")
    return x, y


def wavelet_correlation(
    x, y, filt: str | WaveletFilter = "la8", J: int = 8, alpha: float = 0.05,
) -> WaveletCorrelation:
    """Pearson correlation of the non-boundary MODWT coefficients per level.

    Levels with fewer than four usable coefficients are dropped with a
    warning. Confidence intervals use the Fisher transform with the
    effective size ``n_eff / 2**j``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    x, y = _pair(x, y)
    f = get_filter(filt)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dx, dy = modwt(x, f, J), modwt(y, f, J)
    n = len(x)
    rows = []
    for j in range(1, J + 1):
        n_eff = n - equivalent_length(f.length, j) + 1
        if n_eff < MIN_COEFFICIENTS:
            warnings.warn(f"level {j} skipped: only {max(n_eff, 0)} non-boundary coefficients",
                          stacklevel=2)
            continue
        a, b = dx.w[j - 1][n - n_eff:], dy.w[j - 1][n - n_eff:]
        a, b = a - a.mean(), b - b.mean()
        saa, sbb = float(a @ a), float(b @ b)
        if saa == 0.0 or sbb == 0.0:
            raise NumericError(f"zero-variance wavelet coefficients at level {j}")
        rho = float(np.clip((a @ b) / math.sqrt(saa * sbb), -1.0, 1.0))
        n_hat = n_eff / 2**j
        lo, hi = fisher_ci(rho, n_hat, alpha)
        rows.append((j, rho, lo, hi, n_eff, n_hat))
    cols = list(zip(*rows)) if rows else [()] * 6
    return WaveletCorrelation(
        levels=np.array(cols[0], dtype=int),
        rho=np.array(cols[1], dtype=float),
        ci_low=np.array(cols[2], dtype=float),
        ci_high=np.array(cols[3], dtype=float),
        n_eff=np.array(cols[4], dtype=int),
        n_hat=np.array(cols[5], dtype=float),
        alpha=alpha,
        filter_name=f.name,
    )


def wavelet_covariance(x, y, filt: str | WaveletFilter = "la8", J: int = 8):
    """Unbiased per-level wavelet covariances and the scaling-band covariance.

    Returns ``(cov_by_level, scaling_cov)``; together they add up
    approximately to the sample covariance of ``x`` and ``y``.
    """
    x, y = _pair(x, y)
    f = get_filter(filt)
    dx, dy = modwt(x, f, J), modwt(y, f, J)
    n = len(x)
    cov = []
    for j in range(1, J + 1):
        start = equivalent_length(f.length, j) - 1
        if start >= n:
            cov.append(np.nan)
            continue
        cov.append(float(np.mean(dx.w[j - 1][start:] * dy.w[j - 1][start:])))
    start = min(equivalent_length(f.length, J) - 1, n - 1)
    scaling = float(np.mean((dx.v[start:] - x.mean()) * (dy.v[start:] - y.mean())))
    return np.array(cov), scaling


def resolve_break(break_at, timestamps=None) -> int:
    """Index of the first observation at or after ``break_at``.

    ``break_at`` is either an integer index or, when ``timestamps`` is given,
    a value comparable with its elements.
    """
    if timestamps is None:
        return int(break_at)
    ts = list(timestamps)
    for i, t in enumerate(ts):
        if t >= break_at:
            return i
    return len(ts)


def split_windows(x, y, break_at, timestamps=None):
    """Equal-length windows before and from the break.

    Window I ends just before the break and window II starts at it; the
    longer one is cut to the shorter's length, keeping the observations
    closest to the break. Returns ``((x_I, y_I), (x_II, y_II), index)``.
    """
    x, y = _pair(x, y)
    idx = resolve_break(break_at, timestamps)
    if idx <= 0 or idx >= len(x):
        raise DataError(f"break index {idx} leaves an empty window (series length {len(x)})")
    m = min(idx, len(x) - idx)
    return (x[idx - m: idx], y[idx - m: idx]), (x[idx: idx + m], y[idx: idx + m]), idx


def compare_correlations(
    first: WaveletCorrelation, second: WaveletCorrelation, alpha: float = 0.05,
    *, break_index: int = -1, window_length: int = 0,
) -> ContagionReport:
    """Two-sided Fisher z test of equal correlation at each common level."""
    common = [j for j in first.levels if j in set(second.levels)]
    i1 = [list(first.levels).index(j) for j in common]
    i2 = [list(second.levels).index(j) for j in common]
    r1, r2 = first.rho[i1], second.rho[i2]
    n1, n2 = first.n_hat[i1], second.n_hat[i2]
    z = np.full(len(common), np.nan)
    p = np.full(len(common), np.nan)
    ok = (n1 > 3) & (n2 > 3)
    if not np.all(ok):
        log.warning("levels %s have too few effective observations for the test",
                    [j for j, good in zip(common, ok) if not good])
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.sqrt(1.0 / (n1[ok] - 3.0) + 1.0 / (n2[ok] - 3.0))
        z[ok] = (np.arctanh(r1[ok]) - np.arctanh(r2[ok])) / se
    p[ok] = 2.0 * norm.sf(np.abs(z[ok]))
    reject = np.where(np.isnan(p), False, p < alpha)
    return ContagionReport(
        break_index=break_index,
        window_length=window_length,
        levels=np.array(common, dtype=int),
        rho_I=r1,
        rho_II=r2,
        ci_I=(first.ci_low[i1], first.ci_high[i1]),
        ci_II=(second.ci_low[i2], second.ci_high[i2]),
        z=z,
        p_value=p,
        reject=reject,
        alpha=alpha,
        filter_name=first.filter_name,
    )


def contagion_test(
    x, y, break_at, filt: str | WaveletFilter = "la8", J: int = 8, alpha: float = 0.05,
    timestamps=None,
) -> ContagionReport:
    """Test equal wavelet correlation before and after ``break_at``, level by level."""
    (x1, y1), (x2, y2), idx = split_windows(x, y, break_at, timestamps)
    if len(x1) < 2:
        raise DataError("windows too short for a wavelet decomposition")
    first = wavelet_correlation(x1, y1, filt, J, alpha)
    second = wavelet_correlation(x2, y2, filt, J, alpha)
    return compare_correlations(first, second, alpha, break_index=idx, window_length=len(x1))
