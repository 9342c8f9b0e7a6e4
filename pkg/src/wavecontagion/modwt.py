"""Maximal overlap discrete wavelet transform (MODWT).

Pyramid algorithm with circular boundary conditions, following the
Percival & Walden formulation: at level ``j`` the rescaled filters
``h/sqrt(2)`` and ``g/sqrt(2)`` are applied with ``2**(j-1) - 1`` zeros
between taps, without decimation, so any sample size works.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True, eq=False)
class WaveletFilter:
    name: str
    h: np.ndarray  # wavelet (high-pass), unit energy
    g: np.ndarray  # scaling (low-pass), unit energy

    @property
    def length(self) -> int:
        return len(self.h)

    @classmethod
    def from_scaling(cls, name: str, g) -> WaveletFilter:
        g = np.asarray(g, dtype=float)
        L = len(g)
        h = np.array([(-1) ** l * g[L - 1 - l] for l in range(L)])
        return cls(name, h, g)


_SQ2 = math.sqrt(2.0)

FILTERS = {
    "haar": WaveletFilter.from_scaling("haar", [1 / _SQ2, 1 / _SQ2]),
    "d4": WaveletFilter.from_scaling(
        "d4",
        [0.4829629131445341, 0.8365163037378079, 0.2241438680420134, -0.1294095225512604],
    ),
    "la8": WaveletFilter.from_scaling(
        "la8",
        [
            -0.0757657147893407, -0.0296355276459541, 0.4976186676324578,
            0.8037387518052163, 0.2978577956055422, -0.0992195435769354,
            -0.0126039672622612, 0.0322231006040713,
        ],
    ),
}

_ALIASES = {"d2": "haar", "db1": "haar", "db2": "d4", "la(8)": "la8", "d(4)": "d4", "sym4": "la8"}


def get_filter(name: str | WaveletFilter) -> WaveletFilter:
    if isinstance(name, WaveletFilter):
        return name
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    try:
        return FILTERS[key]
    except KeyError:
        raise ValueError(f"unknown wavelet filter {name!r}; choose from {sorted(FILTERS)}") from None


def equivalent_length(L: int, j: int) -> int:
    """Width ``L_j = (2**j - 1)(L - 1) + 1`` of the level-j equivalent filter."""
    return (2**j - 1) * (L - 1) + 1


def boundary_mask(n: int, filt: str | WaveletFilter, j: int) -> np.ndarray:
    """Indices of level-j coefficients that wrap around the series start."""
    if j < 1:
        raise ValueError("level j must be >= 1")
    L = get_filter(filt).length
    return np.arange(min(n, equivalent_length(L, j) - 1))


@dataclass(frozen=True, eq=False)
class ModwtDecomposition:
    w: list[np.ndarray]
    v: np.ndarray
    filter: WaveletFilter

    @property
    def levels(self) -> int:
        return len(self.w)

    @property
    def n(self) -> int:
        return len(self.v)

    def boundary(self, j: int) -> np.ndarray:
        return boundary_mask(self.n, self.filter, j)

    def interior(self, j: int) -> slice:
        """Slice selecting the coefficients at level ``j`` free of wrap-around."""
        return slice(min(self.n, equivalent_length(self.filter.length, j) - 1), None)


def _circular_filter(x: np.ndarray, taps: np.ndarray, step: int) -> np.ndarray:
    # out[t] = sum_l taps[l] * x[(t - step*l) mod n]
    out = np.zeros_like(x)
    for l, c in enumerate(taps):
        out += c * np.roll(x, step * l)
    return out


def _circular_adjoint(x: np.ndarray, taps: np.ndarray, step: int) -> np.ndarray:
    # out[t] = sum_l taps[l] * x[(t + step*l) mod n]
    out = np.zeros_like(x)
    for l, c in enumerate(taps):
        out += c * np.roll(x, -step * l)
    return out


def modwt(x, filt: str | WaveletFilter = "la8", J: int = 8) -> ModwtDecomposition:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise DataError("MODWT needs a non-empty one-dimensional series")
    if len(x) < 2:
        raise DataError("MODWT needs at least 2 observations")
    if J < 1:
        raise ValueError(f"J must be >= 1, got {J}")
    if 2**J > len(x):
        warnings.warn(f"2**J = {2**J} exceeds the series length {len(x)}", stacklevel=2)
    f = get_filter(filt)
    ht, gt = f.h / _SQ2, f.g / _SQ2
    w = []
    v = x
    for j in range(1, J + 1):
        step = 2 ** (j - 1)
        w.append(_circular_filter(v, ht, step))
        v = _circular_filter(v, gt, step)
    return ModwtDecomposition(w, v, f)


def imodwt(d: ModwtDecomposition) -> np.ndarray:
    n = len(d.v)
    if any(len(wj) != n for wj in d.w):
        raise DataError("inconsistent coefficient vector lengths")
    ht, gt = d.filter.h / _SQ2, d.filter.g / _SQ2
    v = d.v
    for j in range(d.levels, 0, -1):
        step = 2 ** (j - 1)
        v = _circular_adjoint(d.w[j - 1], ht, step) + _circular_adjoint(v, gt, step)
    return v


def scale_to_horizon(j: int, dt: float = 1.0) -> tuple[tuple[float, float], tuple[float, float]]:
    """Frequency band (cycles per bar) and time band (units of ``dt``) of level j."""
    if j < 1:
        raise ValueError("level j must be >= 1")
    if not dt > 0:
        raise ValueError("dt must be positive")
    return (1.0 / 2 ** (j + 1), 1.0 / 2**j), (2**j * dt, 2 ** (j + 1) * dt)


def _fmt_minutes(minutes: float, day_minutes: float) -> str:
    if minutes < 60:
        return f"{minutes:g}min"
    if minutes < day_minutes:
        return f"{minutes / 60:.3g}h"
    return f"{minutes / day_minutes:.3g}d"


def horizon_label(j: int, bar_minutes: float = 5.0, day_minutes: float = 385.0) -> str:
    """Human label of a level's horizon, e.g. ``'10min-20min'`` at 5-min bars.

    Days are trading days of ``day_minutes`` (77 five-minute returns).
    """
    _, (lo, hi) = scale_to_horizon(j, bar_minutes)
    return f"{_fmt_minutes(lo, day_minutes)}-{_fmt_minutes(hi, day_minutes)}"
