"""Cross-wavelet power, squared wavelet coherence, phase and significance.

Smoothing follows the usual convention for Morlet coherence: a Gaussian of
width equal to the scale along time, then a boxcar spanning 0.6 octave along
scale. Both passes renormalise at the edges so constants are preserved.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.fft

from .cwt import CwtField, ScaleGrid, cone_of_influence, fft_length, morlet_cwt, outside_coi
from .errors import DataError, NumericError
from .synth import SeedSpec, gen_ar1

# Gaussian time kernel is truncated at this many standard deviations.
TIME_TRUNCATE = 4.0
SCALE_SMOOTH_OCTAVES = 0.6

ARROWS = ("right", "up-right", "up", "up-left", "left", "down-left", "down", "down-right")


@dataclass(frozen=True, eq=False)
class CrossField:
    values: np.ndarray
    grid: ScaleGrid


@dataclass(frozen=True, eq=False)
class Ar1Fit:
    phi: float
    sigma: float


@dataclass(frozen=True, eq=False)
class Significance:
    thresholds: np.ndarray  # per scale; NaN where no cell lies outside the COI
    mask: np.ndarray
    alpha: float
    n_sim: int
    seed: int
    fit_x: Ar1Fit
    fit_y: Ar1Fit


@dataclass(frozen=True, eq=False)
class CoherenceField:
    r2: np.ndarray
    phase: np.ndarray
    coi: np.ndarray
    grid: ScaleGrid
    significant: np.ndarray | None = None
    alpha: float | None = None
    thresholds: np.ndarray | None = None

    def outside_coi(self) -> np.ndarray:
        return outside_coi(self.grid, self.coi)

    def masked_phase(self) -> np.ndarray:
        """Phase where coherence is significant, NaN elsewhere."""
        if self.significant is None:
            raise ValueError("significance has not been computed")
        return np.where(self.significant, self.phase, np.nan)


def cross_wavelet(wx: CwtField, wy: CwtField) -> CrossField:
    if not wx.grid.same_as(wy.grid) or wx.coefficients.shape != wy.coefficients.shape:
        raise DataError("cross wavelet needs transforms on identical grids and lengths")
    a, b = wx.coefficients, wy.coefficients
    # Spelled out so that a self-product has an exactly zero imaginary part.
    values = (a.real * b.real + a.imag * b.imag) + 1j * (a.imag * b.real - a.real * b.imag)
    return CrossField(values, wx.grid)


def scale_window(dj: float) -> int:
    """Odd number of rows spanned by the 0.6-octave scale boxcar."""
    width = SCALE_SMOOTH_OCTAVES / dj
    return max(1, 2 * int(math.floor((width - 1.0) / 2.0 + 0.5)) + 1)


def time_kernel(scale: float, dt: float) -> np.ndarray:
    """Unit-sum Gaussian ``exp(-u**2 / (2 s**2))`` sampled at lags ``k*dt``."""
    half = int(math.ceil(TIME_TRUNCATE * scale / dt))
    u = np.arange(-half, half + 1) * dt
    w = np.exp(-0.5 * (u / scale) ** 2)
    return w / w.sum()


@lru_cache(maxsize=8)
def _smooth_plan(n: int, key: tuple):
    dt, s0, dj, n_scales, _ = key
    scales = s0 * 2.0 ** (np.arange(n_scales) * dj)
    kernels = [time_kernel(s, dt) for s in scales]
    halves = [(len(k) - 1) // 2 for k in kernels]
    lengths = np.array([fft_length(n + h) for h in halves])
    plan = []
    for m in np.unique(lengths):
        rows = np.flatnonzero(lengths == m)
        spectra = np.empty((len(rows), m))
        for i, k in enumerate(rows):
            h = halves[k]
            buf = np.zeros(m)
            buf[: h + 1] = kernels[k][h:]
            buf[m - h:] = kernels[k][:h]
            spectra[i] = scipy.fft.fft(buf).real
        plan.append((int(m), rows, spectra))
    # Edge weights: the same convolution applied to a field of ones.
    norm = np.empty((n_scales, n))
    for m, rows, spectra in plan:
        ones = scipy.fft.fft(np.ones(n), n=m)
        norm[rows] = scipy.fft.ifft(spectra * ones[None, :], axis=1)[:, :n].real
    for _, _, spectra in plan:
        spectra.setflags(write=False)
    norm.setflags(write=False)
    return tuple(plan), norm


def _smooth_time(field: np.ndarray, grid: ScaleGrid, workers: int) -> np.ndarray:
    n = field.shape[1]
    plan, norm = _smooth_plan(n, grid.key())
    out = np.empty(field.shape, dtype=complex)
    for m, rows, spectra in plan:
        ff = scipy.fft.fft(field[rows], n=m, axis=1, workers=workers)
        ff *= spectra
        out[rows] = scipy.fft.ifft(ff, axis=1, workers=workers)[:, :n]
    out /= norm
    return out


def _smooth_scale(field: np.ndarray, width: int) -> np.ndarray:
    half = width // 2
    k = field.shape[0]
    acc = np.zeros_like(field)
    count = np.zeros((k, 1))
    for d in range(-half, half + 1):
        lo, hi = max(0, -d), min(k, k - d)
        if lo >= hi:
            continue
        acc[lo:hi] += field[lo + d: hi + d]
        count[lo:hi] += 1
    return acc / count


def smooth(field: np.ndarray, grid: ScaleGrid, workers: int = 1) -> np.ndarray:
    """Smooth a (scale, time) field in time then in scale.

    Real input gives real output; complex input stays complex.
    """
    field = np.asarray(field)
    if field.ndim != 2 or field.shape[0] != grid.n_scales:
        raise DataError(f"field shape {field.shape} does not match {grid.n_scales} scales")
    is_complex = np.iscomplexobj(field)
    out = _smooth_scale(_smooth_time(field.astype(complex), grid, workers), scale_window(grid.dj))
    return out if is_complex else out.real


def _coherence_parts(wx: np.ndarray, wy: np.ndarray, grid: ScaleGrid, workers: int):
    inv_s = (1.0 / grid.scales)[:, None]
    # Both auto-spectra are real, so they share one complex smoothing pass.
    packed = smooth((np.abs(wx) ** 2 + 1j * np.abs(wy) ** 2) * inv_s, grid, workers)
    sxy = smooth(wx * np.conj(wy) * inv_s, grid, workers)
    denom = packed.real * packed.imag
    if not np.all(denom > 0):
        raise NumericError("smoothed wavelet power vanished; is an input constant?")
    r2 = np.clip((sxy.real**2 + sxy.imag**2) / denom, 0.0, 1.0)
    return r2, sxy


def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"series lengths differ: {x.shape} vs {y.shape}")
    if len(x) < 4:
        raise DataError("coherence needs at least 4 observations")
    for name, s in (("x", x), ("y", y)):
        if np.ptp(s) == 0:
            raise NumericError(f"{name} has zero variance")
    return x, y


def wavelet_coherence(x, y, grid: ScaleGrid, workers: int = 1) -> CoherenceField:
    """Squared wavelet coherence and phase difference of ``x`` and ``y``.

    ``r2 = |S(W_xy/s)|**2 / (S(|W_x|**2/s) * S(|W_y|**2/s))`` and
    ``phase = angle(S(W_xy/s))`` in ``(-pi, pi]``. Positive phase means
    ``x`` leads ``y``.
    """
    x, y = _check_pair(x, y)
    wx = morlet_cwt(x, grid, workers)
    wy = morlet_cwt(y, grid, workers)
    r2, sxy = _coherence_parts(wx.coefficients, wy.coefficients, grid, workers)
    phase = np.arctan2(sxy.imag, sxy.real)
    phase[phase <= -np.pi] += 2.0 * np.pi
    return CoherenceField(r2, phase, wx.coi, grid)


def phase_to_arrow(phase: float) -> str:
    """Classify a phase angle into one of eight arrow directions.

    The angle is read in the usual counter-clockwise orientation: 0 points
    right (in phase), pi left (anti-phase), pi/2 up and -pi/2 down.
    """
    sector = int(math.floor(phase / (math.pi / 4.0) + 0.5)) % 8
    return ARROWS[sector]


def fit_ar1(x) -> Ar1Fit:
    """Lag-1 autoregression fitted by the sample autocorrelation."""
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        raise DataError("AR(1) fit needs at least 3 observations")
    d = x - x.mean()
    ss = float(d @ d)
    if ss == 0.0:
        raise NumericError("cannot fit AR(1) to a constant series")
    phi = float(np.clip((d[:-1] @ d[1:]) / ss, -0.999, 0.999))
    resid = d[1:] - phi * d[:-1]
    sigma = math.sqrt(float(resid @ resid) / (len(resid) - 1))
    if sigma == 0.0:
        sigma = math.sqrt(ss / (len(x) - 1) * (1 - phi**2))
    return Ar1Fit(phi, sigma)


class _UpperPool:
    """Keeps exactly the values needed for one upper quantile of a stream.

    With ``total`` pooled values the linear-interpolation quantile only
    involves order statistics at ranks ``>= floor(h)``, ``h = (total-1)*q``,
    so everything below can be discarded as values arrive.
    """

    def __init__(self, total: int, q: float):
        self.h = (total - 1) * q
        self.keep = total - int(math.floor(self.h))
        self.values = np.empty(0)

    def add(self, values: np.ndarray) -> None:
        merged = np.concatenate([self.values, values])
        if len(merged) > self.keep:
            merged = np.partition(merged, len(merged) - self.keep)[len(merged) - self.keep:]
        self.values = merged

    def quantile(self) -> float:
        v = np.sort(self.values)
        frac = self.h - math.floor(self.h)
        if frac == 0.0 or len(v) < 2:
            return float(v[0])
        return float(v[0] + frac * (v[1] - v[0]))


def significance_mc(
    x, y, grid: ScaleGrid, n_sim: int = 300, alpha: float = 0.05, seed: int = 0,
    *, r2: np.ndarray | None = None, threads: int = 1, workers: int = 1,
) -> Significance:
    """Per-scale Monte Carlo thresholds for coherence under an AR(1) null.

    Each replicate ``i`` draws independent surrogates for ``x`` and ``y`` from
    their fitted AR(1) models using streams ``2i`` and ``2i+1`` of ``seed``.
    The threshold at each scale is the ``1 - alpha`` quantile of surrogate
    coherence pooled over the cells outside the COI. The result does not
    depend on ``threads``.
    """
    if n_sim < 100:
        raise ValueError(f"n_sim must be >= 100, got {n_sim}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    x, y = _check_pair(x, y)
    n = len(x)
    if r2 is None:
        r2 = wavelet_coherence(x, y, grid, workers).r2
    fit_x, fit_y = fit_ar1(x), fit_ar1(y)
    trusted = outside_coi(grid, cone_of_influence(n, grid.dt, grid))
    rows = [np.flatnonzero(t) for t in trusted]
    pools = [_UpperPool(n_sim * len(r), 1.0 - alpha) if len(r) else None for r in rows]

    def replicate(i: int) -> np.ndarray:
        xs = gen_ar1(n, fit_x.phi, fit_x.sigma, SeedSpec(seed, 2 * i))
        ys = gen_ar1(n, fit_y.phi, fit_y.sigma, SeedSpec(seed, 2 * i + 1))
        wx = morlet_cwt(xs, grid, workers).coefficients
        wy = morlet_cwt(ys, grid, workers).coefficients
        return _coherence_parts(wx, wy, grid, workers)[0]

    def absorb(sim_r2: np.ndarray) -> None:
        for k, idx in enumerate(rows):
            if pools[k] is not None:
                pools[k].add(sim_r2[k, idx])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for start in range(0, n_sim, threads):
                for sim_r2 in pool.map(replicate, range(start, min(n_sim, start + threads))):
                    absorb(sim_r2)
    else:
        for i in range(n_sim):
            absorb(replicate(i))

    thresholds = np.array([p.quantile() if p is not None else np.nan for p in pools])
    with np.errstate(invalid="ignore"):
        mask = r2 > thresholds[:, None]
    return Significance(thresholds, mask, alpha, n_sim, seed, fit_x, fit_y)


def coherence_with_significance(
    x, y, grid: ScaleGrid, n_sim: int = 300, alpha: float = 0.05, seed: int = 0,
    *, threads: int = 1, workers: int = 1,
) -> CoherenceField:
    field = wavelet_coherence(x, y, grid, workers)
    sig = significance_mc(x, y, grid, n_sim, alpha, seed, r2=field.r2,
                          threads=threads, workers=workers)
    return replace(field, significant=sig.mask, alpha=alpha, thresholds=sig.thresholds)
