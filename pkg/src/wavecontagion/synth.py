"""Seeded synthetic data and brute-force reference implementations.

Random streams are Philox (counter-based) generators keyed by
``SeedSequence(master_seed, spawn_key=(stream_id,))``; normal variates use
numpy's ``Generator.standard_normal`` (ziggurat). Any ``(master_seed,
stream_id)`` pair therefore yields the same numbers regardless of how many
other streams are drawn or in which order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np
import scipy.optimize
import scipy.signal

from .cwt import CwtField, ScaleGrid, cone_of_influence
from .errors import DataError
from .ingest import PriceSeries, SessionSpec
from .modwt import ModwtDecomposition, WaveletFilter, get_filter, imodwt, modwt

ORACLE_MAX_N = 2048


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.stream_id < 0:
            raise ValueError("stream_id must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))


def _rng(seed: SeedSpec | int) -> np.random.Generator:
    if isinstance(seed, SeedSpec):
        return seed.generator()
    return SeedSpec(int(seed)).generator()


def gen_ar1(n: int, phi: float, sigma: float = 1.0, seed: SeedSpec | int = 0) -> np.ndarray:
    """Stationary AR(1): ``x_t = phi*x_{t-1} + e_t``, ``e_t ~ N(0, sigma**2)``."""
    if not abs(phi) < 1:
        raise ValueError(f"|phi| must be < 1, got {phi}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    u = _rng(seed).standard_normal(n) * sigma
    u[0] /= math.sqrt(1.0 - phi**2)
    return scipy.signal.lfilter([1.0], [1.0, -phi], u)


def _squared_gains(f: WaveletFilter, J: int) -> np.ndarray:
    """|H_j(f)|**2 for j = 1..J and the level-J scaling filter, on a grid
    fine enough that grid means are exact integrals over frequency."""
    _, gJ = equivalent_filters(f, J)
    m = 1 << (8 * len(gJ)).bit_length()
    gains = [np.abs(np.fft.fft(equivalent_filters(f, j)[0], m)) ** 2 for j in range(1, J + 1)]
    gains.append(np.abs(np.fft.fft(gJ, m)) ** 2)
    return np.array(gains)


def _population_rho(mix: np.ndarray, gains: np.ndarray) -> np.ndarray:
    # y = T*x + U*z in frequency, with white x, z and real gains.
    mix_v = np.append(mix, mix[-1])
    t = mix_v @ gains
    u = np.sqrt(1.0 - mix_v**2) @ gains
    band = gains[:-1]
    num = (band * t).mean(axis=1)
    den = np.sqrt(band.mean(axis=1) * (band * (t**2 + u**2)).mean(axis=1))
    return num / den


def calibrate_mixing(rho, filt: str | WaveletFilter = "la8") -> np.ndarray:
    """Per-level mixing weights whose population MODWT correlations hit ``rho``.

    Mixing coefficients at one level leak into neighbouring levels through
    the overlap of the MODWT pass bands, so using ``rho`` itself as the weight
    biases the realised correlations. This solves for the weights instead.
    """
    rho = np.asarray(rho, dtype=float)
    gains = _squared_gains(get_filter(filt), len(rho))
    if np.max(np.abs(_population_rho(rho, gains) - rho)) < 1e-12:
        return rho
    sol = scipy.optimize.least_squares(
        lambda a: _population_rho(a, gains) - rho, rho, bounds=(-1.0, 1.0), xtol=1e-14,
        ftol=1e-14, gtol=1e-14,
    )
    if np.max(np.abs(sol.fun)) > 1e-6:
        warnings.warn(
            f"target correlations only reachable to {np.max(np.abs(sol.fun)):.2g}", stacklevel=2
        )
    return sol.x


def gen_correlated_pair(
    n: int,
    rho_by_scale,
    filt: str | WaveletFilter = "la8",
    seed: SeedSpec | int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """White-noise pair whose MODWT coefficients are correlated per level.

    ``y``'s level-j coefficients are ``a_j * W_j(x) + sqrt(1 - a_j**2) *
    W_j(z)`` for independent white noise ``z``, and ``y`` is the inverse MODWT
    of the mixed set (scaling coefficients mix with ``a_J``). The weights
    ``a`` come from :func:`calibrate_mixing`, so the population wavelet
    correlation at level j is ``rho_by_scale[j-1]``.
    """
    rho = np.asarray(rho_by_scale, dtype=float)
    if rho.ndim != 1 or len(rho) < 1:
        raise ValueError("rho_by_scale must be a non-empty vector")
    if np.any(~np.isfinite(rho)) or np.any(np.abs(rho) > 1):
        raise ValueError("every rho_j must lie in [-1, 1]")
    base = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    x = SeedSpec(base.master_seed, 2 * base.stream_id).generator().standard_normal(n)
    z = SeedSpec(base.master_seed, 2 * base.stream_id + 1).generator().standard_normal(n)
    f = get_filter(filt)
    J = len(rho)
    mix = calibrate_mixing(rho, f)
    dx, dz = modwt(x, f, J), modwt(z, f, J)
    comp = np.sqrt(1.0 - mix**2)
    w = [mix[j] * dx.w[j] + comp[j] * dz.w[j] for j in range(J)]
    v = mix[-1] * dx.v + comp[-1] * dz.v
    return x, imodwt(ModwtDecomposition(w, v, f))


def direct_cwt_oracle(x, grid: ScaleGrid) -> CwtField:
    """Morlet CWT by explicit time-domain summation (O(n**2 K)).

    Applies the same mean removal as :func:`wavecontagion.cwt.morlet_cwt`.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n > ORACLE_MAX_N:
        raise DataError(f"oracle limited to n <= {ORACLE_MAX_N}, got {n}")
    y = x - x.mean()
    t = np.arange(n)
    lag = (t[None, :] - t[:, None]) * grid.dt  # [u, t] -> (t - u) dt
    out = np.empty((grid.n_scales, n), dtype=complex)
    for k, s in enumerate(grid.scales):
        tau = lag / s
        psi = math.pi**-0.25 * np.exp(1j * grid.omega0 * tau - 0.5 * tau**2)
        out[k] = (np.conj(psi) * y[None, :]).sum(axis=1) * grid.dt / math.sqrt(s)
    return CwtField(out, grid, cone_of_influence(n, grid.dt, grid), n)


def equivalent_filters(filt: str | WaveletFilter, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Level-j MODWT wavelet and scaling filters by explicit upsampled convolution."""
    f = get_filter(filt)
    ht, gt = f.h / math.sqrt(2.0), f.g / math.sqrt(2.0)

    def up(c, k):
        out = np.zeros((len(c) - 1) * 2**k + 1)
        out[:: 2**k] = c
        return out

    g_acc = np.array([1.0])
    for k in range(j - 1):
        g_acc = np.convolve(g_acc, up(gt, k))
    return np.convolve(g_acc, up(ht, j - 1)), np.convolve(g_acc, up(gt, j - 1))


def direct_modwt_oracle(x, filt: str | WaveletFilter, J: int) -> ModwtDecomposition:
    """MODWT by direct circular filtering with the equivalent filters."""
    x = np.asarray(x, dtype=float)
    n = len(x)

    def circular(taps):
        # out[t] = sum_l taps[l] * x[(t - l) mod n]
        idx = (np.arange(n)[:, None] - np.arange(len(taps))[None, :]) % n
        return x[idx] @ taps

    w = []
    for j in range(1, J + 1):
        hj, gj = equivalent_filters(filt, j)
        w.append(circular(hj))
    return ModwtDecomposition(w, circular(gj), get_filter(filt))


def business_days(start: date, n_days: int) -> list[date]:
    """``n_days`` consecutive Monday-Friday dates from ``start``."""
    out, d = [], start
    while len(out) < n_days:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def session_prices(
    returns: np.ndarray,
    spec: SessionSpec,
    start: date,
    symbols: list[str],
    seed: SeedSpec | int = 0,
    p0: float = 100.0,
    gap_scale: float = 5.0,
) -> list[PriceSeries]:
    """Lay return series onto full session days and integrate them to prices.

    ``returns`` has shape ``(n_series, n_days * returns_per_day)``. Each day
    opens at the previous close moved by a random overnight gap with
    ``gap_scale`` times the intraday return st.dev, which intraday returns
    must never see.
    """
    returns = np.atleast_2d(np.asarray(returns, dtype=float))
    per_day = spec.returns_per_day
    n_series, total = returns.shape
    if total % per_day:
        raise ValueError(f"return length {total} is not a multiple of {per_day} per day")
    if len(symbols) != n_series:
        raise ValueError("one symbol per series is required")
    days = business_days(start, total // per_day)
    stamps = tuple(t for d in days for t in spec.bar_times(d))
    base = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    out = []
    for i, sym in enumerate(symbols):
        r = returns[i].reshape(len(days), per_day)
        scale = float(np.std(returns[i])) or 1.0
        gaps = SeedSpec(base.master_seed, 1000 + i).generator().standard_normal(len(days))
        logp = np.empty((len(days), per_day + 1))
        level = math.log(p0)
        for d in range(len(days)):
            level += gap_scale * scale * gaps[d] if d else 0.0
            logp[d, 0] = level
            logp[d, 1:] = level + np.cumsum(r[d])
            level = logp[d, -1]
        out.append(PriceSeries(sym, stamps, np.exp(logp.ravel())))
    return out
