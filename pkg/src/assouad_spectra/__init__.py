"""Assouad and lower dimension spectra of carpets, self-similar sets, percolation and Moran sets."""

from .carpets import (
    CarpetSpec,
    Word,
    assouad_spectrum,
    carpet_dimensions,
    column_stats,
    covering_oracle,
    lower_spectrum,
    symbolic_cover_count,
)
from .errors import SpectraError
from .spectrum_core import DimensionSummary, SpectrumCurve, ThetaGrid, TruncatedLimit, empirical_spectrum

__all__ = [
    "CarpetSpec",
    "DimensionSummary",
    "SpectraError",
    "SpectrumCurve",
    "ThetaGrid",
    "TruncatedLimit",
    "Word",
    "assouad_spectrum",
    "carpet_dimensions",
    "column_stats",
    "covering_oracle",
    "empirical_spectrum",
    "lower_spectrum",
    "symbolic_cover_count",
]

__version__ = "0.1.0"
