"""Wavelet comovement and contagion analysis for intraday return series."""

from .coherence import (
    CoherenceField,
    Significance,
    coherence_with_significance,
    cross_wavelet,
    fit_ar1,
    phase_to_arrow,
    significance_mc,
    wavelet_coherence,
)
from .cwt import CwtField, ScaleGrid, cone_of_influence, make_scale_grid, morlet_cwt
from .errors import DataError, NumericError, WaveContagionError
from .ingest import (
    DescriptiveStats,
    PriceSeries,
    ReturnSeries,
    SessionSpec,
    align_sessions,
    descriptive_stats,
    load_price_csv,
    log_returns,
)
from .modwt import (
    FILTERS,
    ModwtDecomposition,
    WaveletFilter,
    boundary_mask,
    get_filter,
    horizon_label,
    imodwt,
    modwt,
    scale_to_horizon,
)
from .synth import SeedSpec, gen_ar1, gen_correlated_pair
from .wcorr import ContagionReport, WaveletCorrelation, contagion_test, wavelet_correlation

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
