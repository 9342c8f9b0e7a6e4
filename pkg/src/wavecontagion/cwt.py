"""Continuous Morlet wavelet transform on a logarithmic scale grid.

The transform is evaluated in the frequency domain. Each scale is zero-padded
to the next power of two (or three times a power of two) above
``n + 9*s/dt``, which covers the effective support of the daughter wavelet,
so the circular product equals the linear (zero-extended) correlation to
rounding error. The padded tail is dropped from the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from .errors import DataError

DEFAULT_OMEGA0 = 6.0
DEFAULT_DJ = 1.0 / 12.0

# Half-width, in units of scale, beyond which exp(-t^2/2) < 3e-18.
_WAVELET_SUPPORT = 9.0
# Rows transformed per batch; bounds peak memory on long series.
_ROW_CHUNK = 32


def fourier_factor(omega0: float = DEFAULT_OMEGA0) -> float:
    """Ratio of equivalent Fourier period to Morlet scale."""
    return 4.0 * math.pi / (omega0 + math.sqrt(2.0 + omega0**2))


@dataclass(frozen=True, eq=False)
class ScaleGrid:
    """Logarithmic grid ``s_k = s0 * 2**(k*dj)``, ``k = 0..K-1``."""

    dt: float
    s0: float
    dj: float
    scales: np.ndarray
    omega0: float = DEFAULT_OMEGA0

    @property
    def fourier_factor(self) -> float:
        return fourier_factor(self.omega0)

    @property
    def periods(self) -> np.ndarray:
        return self.fourier_factor * self.scales

    @property
    def n_scales(self) -> int:
        return len(self.scales)

    def key(self) -> tuple:
        return (self.dt, self.s0, self.dj, self.n_scales, self.omega0)

    def same_as(self, other: ScaleGrid) -> bool:
        return self.key() == other.key()

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "s0": self.s0,
            "dj": self.dj,
            "n_scales": self.n_scales,
            "omega0": self.omega0,
            "fourier_factor": self.fourier_factor,
            "scales": self.scales.tolist(),
            "periods": self.periods.tolist(),
        }


def default_n_scales(
    n: int, dt: float = 1.0, s0: float | None = None, dj: float = DEFAULT_DJ,
    omega0: float = DEFAULT_OMEGA0,
) -> int:
    """Number of scales whose Fourier period stays within ``n*dt/2``."""
    s0 = 2.0 * dt if s0 is None else s0
    ratio = n * dt / (2.0 * fourier_factor(omega0) * s0)
    if ratio < 1.0:
        return 1
    return int(math.floor(math.log2(ratio) / dj + 1e-9)) + 1


def make_scale_grid(
    dt: float = 1.0,
    s0: float | None = None,
    dj: float = DEFAULT_DJ,
    n_scales: int | None = None,
    *,
    omega0: float = DEFAULT_OMEGA0,
    n: int | None = None,
) -> ScaleGrid:
    """Build a :class:`ScaleGrid`.

    ``s0`` defaults to ``2*dt``. When ``n_scales`` is omitted the series
    length ``n`` must be given and the grid stops at the last scale whose
    Fourier period is at most ``n*dt/2``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    s0 = 2.0 * dt if s0 is None else float(s0)
    if s0 < 2.0 * dt * (1 - 1e-12):
        raise ValueError(f"s0={s0} must be at least 2*dt={2 * dt}")
    if not dj > 0:
        raise ValueError(f"dj must be positive, got {dj}")
    if n_scales is None:
        if n is None:
            raise ValueError("either n_scales or the series length n is required")
        n_scales = default_n_scales(n, dt, s0, dj, omega0)
    if n_scales < 1:
        raise ValueError(f"n_scales must be >= 1, got {n_scales}")
    scales = s0 * 2.0 ** (np.arange(n_scales) * dj)
    return ScaleGrid(float(dt), s0, float(dj), scales, float(omega0))


@dataclass(frozen=True, eq=False)
class CwtField:
    coefficients: np.ndarray  # complex, (n_scales, n_original)
    grid: ScaleGrid
    coi: np.ndarray
    n_original: int

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    def outside_coi(self) -> np.ndarray:
        return outside_coi(self.grid, self.coi)


def cone_of_influence(n: int, dt: float, grid: ScaleGrid) -> np.ndarray:
    """Largest trustworthy Fourier period at each time index."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = np.arange(n, dtype=float)
    edge = np.minimum(u + 0.5, n - u - 0.5)
    return grid.fourier_factor * math.sqrt(2.0) * dt * edge


def outside_coi(grid: ScaleGrid, coi: np.ndarray) -> np.ndarray:
    """Boolean (scale, time) mask of cells unaffected by the series edges."""
    return grid.periods[:, None] <= coi[None, :]


def fft_length(need: int) -> int:
    """Smallest ``2**a * 3**b`` (b <= 1) that is at least ``need``."""
    p2 = 1 << max(0, (need - 1).bit_length())
    p3 = 3 * (p2 // 4)
    return p3 if p3 >= need else p2


def _pad_length(n: int, scale: float, dt: float) -> int:
    return fft_length(n + int(math.ceil(_WAVELET_SUPPORT * scale / dt)))


@lru_cache(maxsize=8)
def _plan(n: int, key: tuple) -> tuple[tuple[int, np.ndarray, np.ndarray], ...]:
    """Group scales by padded FFT length and tabulate wavelet spectra.

    Returns tuples of (fft length, row indices, spectra[rows, length]).
    """
    dt, s0, dj, n_scales, omega0 = key
    scales = s0 * 2.0 ** (np.arange(n_scales) * dj)
    lengths = np.array([_pad_length(n, s, dt) for s in scales])
    norm = math.pi**-0.25 * math.sqrt(2.0 * math.pi)
    plan = []
    for m in np.unique(lengths):
        rows = np.flatnonzero(lengths == m)
        omega = 2.0 * np.pi * np.fft.fftfreq(m)  # rad / sample
        spectra = np.zeros((len(rows), m))
        for i, k in enumerate(rows):
            ratio = scales[k] / dt
            # Periodise the analytic transform so the table is the exact DFT
            # of the sampled (infinite) daughter wavelet.
            acc = np.zeros(m)
            for p in (-1, 0, 1):
                acc += np.exp(-0.5 * (ratio * (omega + 2.0 * np.pi * p) - omega0) ** 2)
            spectra[i] = norm * math.sqrt(scales[k]) * acc
        spectra.setflags(write=False)
        plan.append((int(m), rows, spectra))
    return tuple(plan)


def _validate_series(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DataError("series must be one-dimensional")
    if len(x) < 4:
        raise DataError(f"series too short for a CWT: {len(x)} < 4")
    if not np.all(np.isfinite(x)):
        raise DataError("series contains non-finite values")
    return x


def morlet_cwt(x, grid: ScaleGrid, workers: int = 1) -> CwtField:
    """Morlet CWT of ``x`` on ``grid``.

    ``W(u, s) = sum_t x_t * dt/sqrt(s) * conj(psi((t - u) dt / s))`` with
    ``psi(t) = pi**-0.25 * exp(1j*omega0*t) * exp(-t**2/2)``, evaluated for
    the mean-removed series. The result has shape ``(n_scales, len(x))``.
    """
    x = _validate_series(x)
    n = len(x)
    y = x - x.mean()
    out = np.empty((grid.n_scales, n), dtype=complex)
    for m, rows, spectra in _plan(n, grid.key()):
        xf = scipy.fft.fft(y, n=m, workers=workers)
        for start in range(0, len(rows), _ROW_CHUNK):
            chunk = slice(start, start + _ROW_CHUNK)
            prod = spectra[chunk] * xf[None, :]
            out[rows[chunk]] = scipy.fft.ifft(prod, axis=1, workers=workers)[:, :n]
    coi = cone_of_influence(n, grid.dt, grid)
    return CwtField(out, grid, coi, n)
