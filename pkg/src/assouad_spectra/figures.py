"""Plot-ready CSV data for the carpet, overlap and Moran spectrum figures.

Every file has the columns ``theta, value, envelope_lo, envelope_hi``; the
envelope columns are the general bounds for that spectrum kind.
"""
from __future__ import annotations

import csv
import io

import numpy as np

from .carpets import CarpetSpec, assouad_curve, carpet_dimensions, lower_curve
from .errors import ValidationError
from .moran import inverted_lower_curve, recipe_curve, recipe_dimensions, union_curves, zero_curve
from .selfsimilar import OverlapBoundParams, overlap_bound_curve
from .spectrum_core import DimensionSummary, SpectrumCurve, ThetaGrid, envelope_arrays, fmt

FIGURES = ("fig3", "fig4", "fig6")

# carpets of the spectrum plots: columns {2, 1} on a 2x3 grid and {4, 4, 2} on a 3x5 grid
FIG3_LEFT = CarpetSpec.from_columns(2, 3, {0: [0, 2], 1: [1]})
FIG3_RIGHT = CarpetSpec.from_columns(3, 5, {0: [0, 1, 3, 4], 1: [0, 2, 3, 4], 2: [1, 3]})

FIG4_LEFT = OverlapBoundParams(s=0.7, t=0.5, upper_box=0.6)
FIG4_RIGHT = OverlapBoundParams(s=0.3, t=0.28, upper_box=0.3)

# (t, lambda) recipes per panel; True marks the extra component with
# upper box dimension 0 and Assouad dimension 1, whose spectrum is identically 0
FIG6_PANELS = (
    ([(1.0, 1.1), (0.7, 1.2), (0.5, 1.5), (0.3, 4.0)], False),
    ([(0.5, 2.0)], True),
    ([(0.7, 2.0), (0.9, 1.5)], True),
)


def curve_csv(curve: SpectrumCurve, lo: np.ndarray, hi: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["theta", "value", "envelope_lo", "envelope_hi"])
    for row in zip(curve.thetas, curve.values, lo, hi):
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def _with_envelope(curve: SpectrumCurve, summary: DimensionSummary) -> str:
    lo, hi = envelope_arrays(summary, curve.grid, curve.kind)
    return curve_csv(curve, lo, hi)


def _fig3(grid):
    out = {}
    for side, spec in (("left", FIG3_LEFT), ("right", FIG3_RIGHT)):
        dims = carpet_dimensions(spec)
        out[f"fig3_{side}_assouad.csv"] = _with_envelope(assouad_curve(spec, grid), dims)
        out[f"fig3_{side}_lower.csv"] = _with_envelope(lower_curve(spec, grid), dims)
    return out


def _fig4(grid):
    out = {}
    for side, params in (("left", FIG4_LEFT), ("right", FIG4_RIGHT)):
        # overlaps without weak separation: Assouad dimension 1
        dims = DimensionSummary(lower=0.0, lower_box=params.upper_box, upper_box=params.upper_box, assouad=1.0)
        out[f"fig4_{side}.csv"] = _with_envelope(overlap_bound_curve(params, grid), dims)
    return out


def fig6_panel(index: int, grid: ThetaGrid) -> tuple[SpectrumCurve, DimensionSummary, SpectrumCurve, DimensionSummary]:
    """Assouad curve of the union, its dimensions, and the same for the inverted construction."""
    recipes, with_full = FIG6_PANELS[index]
    curves = [recipe_curve(t, lam, grid) for t, lam in recipes]
    dims = [recipe_dimensions(t, lam) for t, lam in recipes]
    if with_full:
        curves.append(zero_curve(grid))
        dims.append(DimensionSummary(lower=0.0, lower_box=0.0, upper_box=0.0, assouad=1.0))
    upper = union_curves(curves)
    up_dims = DimensionSummary(
        lower=0.0,
        lower_box=0.0,
        upper_box=max(d.upper_box for d in dims),
        assouad=max(d.assouad for d in dims),
    )
    lower = union_curves([inverted_lower_curve(c) for c in curves])
    low_dims = DimensionSummary(
        lower=1.0 - up_dims.assouad,
        lower_box=1.0 - up_dims.upper_box,
        upper_box=1.0,
        assouad=1.0,
    )
    return upper, up_dims, lower, low_dims


def _fig6(grid):
    out = {}
    for idx in range(len(FIG6_PANELS)):
        upper, up_dims, lower, low_dims = fig6_panel(idx, grid)
        out[f"fig6_{idx + 1}_assouad.csv"] = _with_envelope(upper, up_dims)
        out[f"fig6_{idx + 1}_lower.csv"] = _with_envelope(lower, low_dims)
    return out


def emit_figure_data(name: str, grid: ThetaGrid | None = None) -> dict[str, str]:
    """Map of file name to CSV text for the named figure."""
    grid = grid or ThetaGrid.uniform()
    builders = {"fig3": _fig3, "fig4": _fig4, "fig6": _fig6}
    if name not in builders:
        raise ValidationError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    return builders[name](grid)
