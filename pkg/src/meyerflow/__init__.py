"""Meyer-wavelet harmonic analysis toolkit and spectral Navier-Stokes solver."""

from .meyer import (
    CoeffField,
    FilterBank,
    GridConfig,
    SampledField,
    WaveletIndex,
    WaveletTransform,
    analyze,
    build_filter_bank,
    synthesize,
    wavelet_hat,
)

__all__ = [
    "CoeffField",
    "FilterBank",
    "GridConfig",
    "SampledField",
    "WaveletIndex",
    "WaveletTransform",
    "analyze",
    "build_filter_bank",
    "synthesize",
    "wavelet_hat",
]

__version__ = "0.1.0"
