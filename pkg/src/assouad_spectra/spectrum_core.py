"""Spectrum curves, universal envelope bounds and the two-scale estimator.

Every family module in this package produces :class:`SpectrumCurve` objects
sampled on a :class:`ThetaGrid`.  The envelope functions encode the general
bounds that hold for any totally bounded set,

    upper_box <= dim_A^theta <= min(upper_box / (1 - theta), assouad)
    lower     <= dim_L^theta <= lower_box

and :func:`check_curve` verifies a curve against them.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .errors import DomainError, InsufficientDataError, OracleContractError, StructuralError

KINDS = ("assouad", "lower")


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta!r}")
    return theta


@dataclass(frozen=True)
class ThetaGrid:
    """Strictly increasing sample points inside (0, 1)."""

    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if not pts:
            raise StructuralError("theta grid must be nonempty")
        if any(not 0.0 < p < 1.0 for p in pts):
            raise DomainError("theta grid points must lie in the open interval (0, 1)")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise StructuralError("theta grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, count: int = 999) -> "ThetaGrid":
        """``count`` equally spaced points ``i / (count + 1)``; the default is 0.001..0.999."""
        if count < 1:
            raise StructuralError("grid needs at least one point")
        return cls(tuple(i / (count + 1) for i in range(1, count + 1)))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def asarray(self) -> np.ndarray:
        return np.asarray(self.points)


@dataclass(frozen=True)
class DimensionSummary:
    """The classical dimensions of a set, ordered lower <= lower_box <= upper_box <= assouad."""

    lower: float
    lower_box: float
    upper_box: float
    assouad: float
    ambient_dim: int = 1
    hausdorff: float | None = None
    modified_lower: float | None = None

    def __post_init__(self):
        if self.ambient_dim < 1:
            raise DomainError("ambient dimension must be a positive integer")
        chain = (self.lower, self.lower_box, self.upper_box, self.assouad)
        tol = 1e-12
        if any(b < a - tol for a, b in zip(chain, chain[1:])):
            raise DomainError(f"dimension chain violated: {chain}")
        values = chain + tuple(v for v in (self.hausdorff, self.modified_lower) if v is not None)
        if any(v < -tol or v > self.ambient_dim + tol for v in values):
            raise DomainError(f"dimensions must lie in [0, {self.ambient_dim}]")

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "lower_box": self.lower_box,
            "upper_box": self.upper_box,
            "assouad": self.assouad,
            "hausdorff": self.hausdorff,
            "modified_lower": self.modified_lower,
            "ambient_dim": self.ambient_dim,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DimensionSummary":
        return cls(
            lower=data["lower"],
            lower_box=data["lower_box"],
            upper_box=data["upper_box"],
            assouad=data["assouad"],
            ambient_dim=int(data.get("ambient_dim", 1)),
            hausdorff=data.get("hausdorff"),
            modified_lower=data.get("modified_lower"),
        )


@dataclass
class SpectrumCurve:
    """A sampled map ``theta -> value`` for one spectrum kind."""

    grid: ThetaGrid
    values: np.ndarray
    kind: str = "assouad"
    transitions: list[float] = field(default_factory=list)
    closed_form: str | None = None
    ambient_dim: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) != len(self.grid):
            raise StructuralError(
                f"curve has {self.values.size} values for {len(self.grid)} grid points"
            )
        if self.kind not in KINDS:
            raise StructuralError(f"unknown spectrum kind {self.kind!r}")
        if np.any(self.values < -1e-12):
            raise DomainError("spectrum values must be nonnegative")
        if self.ambient_dim is not None and np.any(self.values > self.ambient_dim + 1e-12):
            raise DomainError("spectrum values exceed the ambient dimension")
        self.transitions = [float(t) for t in self.transitions]

    @property
    def thetas(self) -> np.ndarray:
        return self.grid.asarray()

    @classmethod
    def from_function(cls, func: Callable[[float], float], grid: ThetaGrid, **kwargs) -> "SpectrumCurve":
        return cls(grid, np.array([func(t) for t in grid]), **kwargs)

    # -- serialisation -------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["theta", "value"])
        for t, v in zip(self.grid, self.values):
            writer.writerow([fmt(t), fmt(v)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: str = "assouad") -> "SpectrumCurve":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["theta", "value"]:
            raise StructuralError("CSV must start with header 'theta,value'")
        body = [(float(a), float(b)) for a, b in rows[1:]]
        return cls(ThetaGrid(tuple(a for a, _ in body)), np.array([b for _, b in body]), kind=kind)

    def to_dict(self) -> dict:
        return {
            "grid": [round_sig(t) for t in self.grid],
            "values": [round_sig(v) for v in self.values],
            "kind": self.kind,
            "transitions": [round_sig(t) for t in self.transitions],
            "closed_form": self.closed_form,
            "ambient_dim": self.ambient_dim,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "SpectrumCurve":
        missing = {"grid", "values", "kind", "transitions", "closed_form"} - set(data)
        if missing:
            raise StructuralError(f"curve JSON lacks keys {sorted(missing)}")
        return cls(
            ThetaGrid(tuple(data["grid"])),
            np.asarray(data["values"], dtype=float),
            kind=data["kind"],
            transitions=list(data["transitions"]),
            closed_form=data["closed_form"],
            ambient_dim=data.get("ambient_dim"),
        )

    @classmethod
    def from_json(cls, text: str) -> "SpectrumCurve":
        return cls.from_dict(json.loads(text))


def fmt(x: float) -> str:
    """Decimal rendering with 12 significant digits."""
    return f"{float(x):.12g}"


def round_sig(x: float) -> float:
    return float(fmt(x))


# -- envelopes ------------------------------------------------------------------

def assouad_envelope(summary: DimensionSummary, theta: float) -> tuple[float, float]:
    """General bounds ``(upper_box, min(upper_box/(1-theta), assouad))`` on the Assouad spectrum."""
    theta = _check_theta(theta)
    hi = min(summary.upper_box / (1.0 - theta), summary.assouad)
    return summary.upper_box, hi


def lower_envelope(summary: DimensionSummary, theta: float) -> tuple[float, float]:
    """General bounds ``(lower, lower_box)`` on the lower spectrum."""
    _check_theta(theta)
    return summary.lower, summary.lower_box


def envelope(summary: DimensionSummary, theta: float, kind: str) -> tuple[float, float]:
    if kind == "assouad":
        return assouad_envelope(summary, theta)
    if kind == "lower":
        return lower_envelope(summary, theta)
    raise StructuralError(f"unknown spectrum kind {kind!r}")


def envelope_arrays(summary: DimensionSummary, grid: ThetaGrid, kind: str) -> tuple[np.ndarray, np.ndarray]:
    pairs = [envelope(summary, t, kind) for t in grid]
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


@dataclass(frozen=True)
class Violation:
    kind: str  # "below", "above" or "jump"
    theta: float
    value: float
    bound: float


def check_curve(
    curve: SpectrumCurve,
    summary: DimensionSummary,
    tol: float = 1e-9,
    continuity: float | None = None,
) -> list[Violation]:
    """List envelope violations beyond ``tol`` and adjacent jumps above ``continuity``.

    An empty list means the curve passed.
    """
    if len(curve.values) != len(curve.grid):
        raise StructuralError("curve values and grid differ in length")
    report = []
    lo, hi = envelope_arrays(summary, curve.grid, curve.kind)
    for t, v, a, b in zip(curve.grid, curve.values, lo, hi):
        if v < a - tol:
            report.append(Violation("below", t, float(v), float(a)))
        elif v > b + tol:
            report.append(Violation("above", t, float(v), float(b)))
    if continuity is not None:
        thetas = curve.thetas
        jumps = np.abs(np.diff(curve.values))
        for i in np.flatnonzero(jumps > continuity):
            report.append(Violation("jump", float(thetas[i + 1]), float(curve.values[i + 1]), float(curve.values[i])))
    return report


# -- empirical two-scale estimator ----------------------------------------------

@dataclass
class SpectrumEstimate:
    """Regression slope of the maximal log-count against ``log(R / R^(1/theta))``.

    ``ratios`` holds the per-scale quotients ``log N / log(R/r)`` so callers can
    judge convergence; ``last_max`` is the maximum of the last ``window`` ratios.
    """

    theta: float
    value: float
    scales: np.ndarray
    counts: np.ndarray
    ratios: np.ndarray
    intercept: float
    last_max: float

    def __float__(self):
        return float(self.value)


def empirical_spectrum(
    oracle: Callable[[Hashable, float, float], int],
    theta: float,
    scales: Sequence[float],
    centers: Iterable[Hashable],
    window: int = 3,
) -> SpectrumEstimate:
    """Estimate ``dim_A^theta`` from a covering oracle.

    Parameters
    ----------
    oracle : callable
        ``oracle(center, R, r)`` returns the number of ``r``-boxes needed to
        cover the part of the set within the ``R``-neighbourhood of ``center``.
    theta : float
        Scale exponent in (0, 1); the small scale is ``R ** (1 / theta)``.
    scales : sequence of float
        Strictly decreasing large scales ``R``.
    centers : iterable
        Center descriptors handed to the oracle; the count is maximised over them.
    window : int
        Number of trailing scales used for :attr:`SpectrumEstimate.last_max`.
    """
    theta = _check_theta(theta)
    scales = np.asarray(list(scales), dtype=float)
    centers = list(centers)
    if scales.size < 2:
        raise InsufficientDataError("need at least two scales")
    if np.any(np.diff(scales) >= 0) or np.any(scales <= 0) or np.any(scales >= 1):
        raise DomainError("scales must be strictly decreasing values in (0, 1)")
    if not centers:
        raise InsufficientDataError("need at least one center")

    counts = np.empty(scales.size)
    for idx, R in enumerate(scales):
        r = R ** (1.0 / theta)
        best = 0
        for c in centers:
            n = oracle(c, R, r)
            if n < 1:
                raise OracleContractError(f"oracle returned {n} for center {c!r} at R={R}")
            best = max(best, n)
        counts[idx] = best

    x = (1.0 - 1.0 / theta) * np.log(scales)
    y = np.log(counts)
    slope, intercept = np.polyfit(x, y, 1)
    ratios = y / x
    return SpectrumEstimate(
        theta=theta,
        value=float(slope),
        scales=scales,
        counts=counts,
        ratios=ratios,
        intercept=float(intercept),
        last_max=float(np.max(ratios[-window:])),
    )


# -- finite-scale limsup / liminf ---------------------------------------------------

@dataclass
class TruncatedLimit:
    """Per-index partial values with their sup and inf over a trailing window.

    The window holds the indices ``k >= ks[-1] * (1 - tail_fraction)``; ``exact``
    carries a known limit when one is available.
    """

    ks: np.ndarray
    partials: np.ndarray
    tail_fraction: float = 0.2
    exact: object | None = None

    def __post_init__(self):
        self.ks = np.asarray(self.ks)
        self.partials = np.asarray(self.partials, dtype=float)
        if self.partials.size == 0 or self.partials.shape != self.ks.shape:
            raise InsufficientDataError("truncated limit needs a nonempty, aligned list of partials")
        if not 0.0 < self.tail_fraction <= 1.0:
            raise DomainError("tail_fraction must lie in (0, 1]")

    @property
    def tail_mask(self) -> np.ndarray:
        start = self.ks[-1] * (1.0 - self.tail_fraction)
        mask = self.ks >= start
        mask[-1] = True
        return mask

    @property
    def sup_tail(self) -> float:
        return float(np.max(self.partials[self.tail_mask]))

    @property
    def inf_tail(self) -> float:
        return float(np.min(self.partials[self.tail_mask]))

    def as_pairs(self) -> list[tuple[int, float]]:
        return [(int(k), float(v)) for k, v in zip(self.ks, self.partials)]


# -- phase transitions ------------------------------------------------------------

def detect_transitions(curve: SpectrumCurve, window: int = 1, jump_tol: float | None = None) -> list[float]:
    """Grid points where the discrete second difference exceeds ``jump_tol``.

    Firing stencils at consecutive grid indices are merged and each run is
    reported at its largest second difference, so steep curvature next to a
    kink does not drag the reported point away from it.  A slope jump of
    size ``J`` at a point between grid nodes produces a second difference of
    at least ``J * h / 2`` on one of the two straddling stencils (``h`` the
    grid step), while smooth curvature
    ``f''`` contributes ``f'' * (window * h) ** 2``.  The default threshold
    ``0.01 * window * h`` therefore flags slope jumps above roughly 0.02 and
    ignores curvature below ``0.01 / (window * h)``.
    """
    if window < 1:
        raise StructuralError("window must be a positive integer")
    v = curve.values
    if len(v) < 2 * window + 1:
        raise InsufficientDataError("grid too coarse for the second-difference stencil")
    thetas = curve.thetas
    d2 = np.abs(v[: -2 * window] - 2.0 * v[window:-window] + v[2 * window :])
    if jump_tol is None:
        h = float(np.median(np.diff(thetas))) if len(thetas) > 1 else 1.0
        jump_tol = 0.01 * window * h
    fired = np.flatnonzero(d2 > jump_tol)
    out: list[float] = []
    if fired.size:
        runs = np.split(fired, np.flatnonzero(np.diff(fired) > 1) + 1)
        for run in runs:
            best = run[np.argmax(d2[run])]
            out.append(float(thetas[best + window]))
    return out
