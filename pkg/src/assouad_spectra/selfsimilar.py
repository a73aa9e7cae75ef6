"""Self-similar sets on the line: pressure, stopping sets, Gibbs weights and the overlap bound.

For similarity maps ``x -> r_i x + a_i`` the contraction of a word is the
product of its ratios, so the topological pressure is exactly
``P(s) = log sum_i r_i**s`` and the Gibbs measure at the pressure zero is the
self-similar measure with weights ``r_i**s``.

The Assouad spectrum of an overlapping system is bounded above by
``(s - t theta) / (1 - theta)``, where ``t`` is a uniform Hölder exponent of
the Gibbs measure on balls.  ``t`` is supplied by the caller;
:func:`estimate_t` only offers a finite-scale heuristic for it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, PreconditionError, ResourceError, ValidationError
from .spectrum_core import SpectrumCurve, ThetaGrid, _check_theta

DEFAULT_WORD_CAP = 2_000_000
_REL = 1e-12  # relative slack when comparing products of ratios with delta


@dataclass(frozen=True)
class SimilarIFS:
    ratios: tuple
    translations: tuple

    def __post_init__(self):
        r = tuple(float(x) for x in self.ratios)
        a = tuple(float(x) for x in self.translations)
        if len(r) != len(a):
            raise ValidationError("ratios and translations differ in length")
        if len(r) < 2:
            raise ValidationError("an IFS needs at least two maps")
        for ri, ai in zip(r, a):
            if not 0.0 < ri < 1.0:
                raise ValidationError(f"ratio {ri} is not in (0, 1)")
            if ai < -1e-15 or ri + ai > 1.0 + 1e-15:
                raise ValidationError(f"map x -> {ri} x + {ai} does not send [0, 1] into itself")
        object.__setattr__(self, "ratios", r)
        object.__setattr__(self, "translations", a)

    @classmethod
    def from_maps(cls, maps) -> "SimilarIFS":
        """From ``[(r, a), ...]``."""
        maps = list(maps)
        return cls(tuple(m[0] for m in maps), tuple(m[1] for m in maps))

    @classmethod
    def from_dict(cls, data: dict) -> "SimilarIFS":
        try:
            maps = data["maps"]
            return cls.from_maps((float(m["r"]), float(m["a"])) for m in maps)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"IFS JSON must look like {{'maps': [{{'r': .., 'a': ..}}]}}: {exc}") from None

    def to_dict(self) -> dict:
        return {"maps": [{"r": r, "a": a} for r, a in zip(self.ratios, self.translations)]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __len__(self):
        return len(self.ratios)

    def lip(self, word) -> float:
        return math.prod(self.ratios[i] for i in word)

    def image(self, word) -> tuple[float, float]:
        """The cylinder interval ``[S_word(0), S_word(1)]``."""
        left, scale = 0.0, 1.0
        for i in word:
            left += scale * self.translations[i]
            scale *= self.ratios[i]
        return left, left + scale


def pressure(ifs: SimilarIFS, s: float) -> float:
    """``P(s) = log sum_i r_i**s``."""
    if s < 0:
        raise DomainError(f"pressure is evaluated at s >= 0, got {s}")
    return math.log(math.fsum(r ** s for r in ifs.ratios))


def similarity_exponent(ifs: SimilarIFS, tol: float = 1e-12) -> float:
    """Unique zero of the pressure, by bisection on ``[0, log N / -log max r]``."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    # equal ratios put the root exactly on this bound, so widen it past rounding
    hi = math.log(len(ifs)) / -math.log(max(ifs.ratios)) * (1 + 1e-9) + 1e-12
    # |P'| <= log(1 / min r), so this bracket width also pins |P(s)| below tol
    slope = max(1.0, -math.log(min(ifs.ratios)))
    return float(bisect(lambda s: pressure(ifs, s), 0.0, hi, xtol=tol / slope))


@dataclass
class StoppingSet:
    """Prefix-free words whose contraction has just dropped to ``delta`` or below."""

    words: list
    delta: float
    lips: np.ndarray
    lefts: np.ndarray

    def __len__(self):
        return len(self.words)

    def masses(self, s: float) -> np.ndarray:
        return self.lips ** s


def _expand(ifs: SimilarIFS, delta: float, cap: int, with_words: bool, merge: bool = False):
    """Level-by-level walk of the word tree down to the delta-stopping set.

    Returns contraction products, left endpoints, multiplicities and (optionally)
    words.  With ``merge`` set, cylinders with identical intervals (exact
    overlaps) are collapsed into one entry whose multiplicity counts them.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    r = np.asarray(ifs.ratios)
    a = np.asarray(ifs.translations)
    lip = np.ones(1)
    left = np.zeros(1)
    mult = np.ones(1)
    words = [()] if with_words else None
    out_lip, out_left, out_mult, out_words = [], [], [], []
    total = 0
    limit = delta * (1.0 + _REL)
    while lip.size:
        child_lip = (lip[:, None] * r[None, :]).ravel()
        child_left = (left[:, None] + lip[:, None] * a[None, :]).ravel()
        child_mult = np.repeat(mult, r.size)
        if merge:
            keys, inverse = np.unique(np.stack([child_left, child_lip], axis=1), axis=0, return_inverse=True)
            child_mult = np.bincount(inverse.ravel(), weights=child_mult)
            child_left, child_lip = keys[:, 0], keys[:, 1]
        stop = child_lip <= limit
        total += int(stop.sum())
        if total > cap:
            raise ResourceError(f"stopping set at delta={delta} exceeds the cap of {cap} words")
        out_lip.append(child_lip[stop])
        out_left.append(child_left[stop])
        out_mult.append(child_mult[stop])
        if with_words:
            children = [w + (i,) for w in words for i in range(len(r))]
            out_words.extend(w for w, keep in zip(children, stop) if keep)
            words = [w for w, keep in zip(children, stop) if not keep]
        lip, left, mult = child_lip[~stop], child_left[~stop], child_mult[~stop]
        if lip.size > cap:
            raise ResourceError(f"stopping-set frontier exceeds the cap of {cap} words")
    return np.concatenate(out_lip), np.concatenate(out_left), np.concatenate(out_mult), out_words


def stopping_set(ifs: SimilarIFS, delta: float, cap: int = DEFAULT_WORD_CAP) -> StoppingSet:
    """The family ``{i : Lip(i) <= delta < Lip(i minus its last letter)}``.

    Words are tuples of 0-based map indices.
    """
    lips, lefts, _, words = _expand(ifs, delta, cap, with_words=True)
    return StoppingSet(words=words, delta=delta, lips=lips, lefts=lefts)


def gibbs_mass(ifs: SimilarIFS, s: float, word) -> float:
    """Mass ``prod r_i**s`` of the cylinder of ``word`` under the Gibbs measure at ``s``."""
    return math.prod(ifs.ratios[i] ** s for i in word)


@dataclass
class TEstimate:
    """Minimum over sample points of the log-log slope of ball masses.

    This is a finite-scale heuristic: the true exponent involves a liminf over
    all points and scales, so the value tends to over-estimate it.
    """

    value: float
    slopes: np.ndarray
    points: np.ndarray
    radii: np.ndarray

    def __float__(self):
        return float(self.value)


def ball_masses(ifs: SimilarIFS, s: float, points, radii, refine: float = 1 / 16, cap: int = DEFAULT_WORD_CAP) -> np.ndarray:
    """Gibbs masses of ``B(x, r)`` for every point and radius.

    Each mass sums the cylinders of the stopping set at ``refine * min(radii)``
    whose interval meets the ball, so it over-counts by at most the cylinders
    crossing the ball's boundary.
    """
    radii = np.asarray(radii, dtype=float)
    points = np.asarray(points, dtype=float)
    fine = refine * float(radii.min())
    lips, lefts, mult, _ = _expand(ifs, fine, cap, with_words=False, merge=True)
    order = np.argsort(lefts, kind="stable")
    lefts, lips, mult = lefts[order], lips[order], mult[order]
    mass = mult * lips ** s
    out = np.empty((points.size, radii.size))
    for p, x in enumerate(points):
        for q, rad in enumerate(radii):
            lo = np.searchsorted(lefts, x - rad - fine, side="left")
            hi = np.searchsorted(lefts, x + rad, side="right")
            seg = slice(lo, hi)
            meets = lefts[seg] + lips[seg] >= x - rad
            out[p, q] = mass[seg][meets].sum()
    return out


def estimate_t(
    ifs: SimilarIFS,
    s: float,
    radii,
    samples: int = 16,
    seed: int = 0,
    refine: float = 1 / 16,
    cap: int = DEFAULT_WORD_CAP,
) -> TEstimate:
    """Heuristic upper estimate of the exponent ``t`` from sampled ball masses.

    Sample points are images of the first map's fixed point under random
    words with uniformly chosen letters, one child seed per sample.
    """
    radii = np.asarray(list(radii), dtype=float)
    if radii.size < 2 or np.any(np.diff(radii) >= 0) or radii[0] >= 1 or radii[-1] <= 0:
        raise DomainError("radii must be at least two strictly decreasing values in (0, 1)")
    if samples < 1:
        raise DomainError("samples must be at least 1")
    anchor = ifs.translations[0] / (1.0 - ifs.ratios[0])
    target = radii[-1] * 1e-6
    points = []
    for child in np.random.SeedSequence(seed).spawn(samples):
        rng = np.random.default_rng(child)
        x, scale = 0.0, 1.0
        while scale > target:
            i = int(rng.integers(len(ifs)))
            x += scale * ifs.translations[i]
            scale *= ifs.ratios[i]
        points.append(x + scale * anchor)
    masses = ball_masses(ifs, s, points, radii, refine=refine, cap=cap)
    logr = np.log(radii)
    slopes = np.array([np.polyfit(logr, np.log(row), 1)[0] for row in masses])
    return TEstimate(value=float(slopes.min()), slopes=slopes, points=np.asarray(points), radii=radii)


# -- overlap bound -------------------------------------------------------------------

@dataclass(frozen=True)
class OverlapBoundParams:
    s: float
    t: float
    upper_box: float

    def __post_init__(self):
        tol = 1e-12
        if not (-tol <= self.t <= self.upper_box + tol and self.upper_box <= min(self.s, 1.0) + tol):
            raise DomainError(
                f"need 0 <= t <= upper_box <= min(s, 1); got s={self.s}, t={self.t}, upper_box={self.upper_box}"
            )


def overlap_bound_raw(params: OverlapBoundParams, theta: float) -> float:
    theta = _check_theta(theta)
    return (params.s - params.t * theta) / (1.0 - theta)


def overlap_spectrum_bound(params: OverlapBoundParams, theta: float) -> float:
    """Best available upper bound: ``(s - t theta)/(1 - theta)`` clipped by the general envelope and by 1."""
    raw = overlap_bound_raw(params, theta)
    return min(raw, 1.0, params.upper_box / (1.0 - theta))


def overlap_bound_curve(params: OverlapBoundParams, grid: ThetaGrid | None = None) -> SpectrumCurve:
    grid = grid or ThetaGrid.uniform()
    return SpectrumCurve(
        grid,
        np.array([overlap_spectrum_bound(params, t) for t in grid]),
        kind="assouad",
        closed_form=f"min(({params.s:g} - {params.t:g}*theta)/(1-theta), {params.upper_box:g}/(1-theta), 1)",
        ambient_dim=1,
    )


def improvement_region(params: OverlapBoundParams) -> tuple[float, float] | None:
    """Thetas where the overlap bound beats ``min(upper_box/(1-theta), 1)``, or ``None``."""
    s, t, box = params.s, params.t, params.upper_box
    if t <= 0:
        return None
    lo = max((s - box) / t, 0.0)
    hi = 1.0 if t >= 1 else min((1.0 - s) / (1.0 - t), 1.0)
    if lo >= hi:
        return None
    return lo, hi


def wsp_spectrum(
    upper_box: float,
    weak_separation: bool = False,
    no_superexp_concentration: bool = False,
    grid: ThetaGrid | None = None,
) -> SpectrumCurve:
    """Constant spectrum equal to the upper box dimension.

    Either flag is a caller assertion; neither property is checked here.
    With weak separation the constant also equals the Assouad dimension.
    """
    if not (weak_separation or no_superexp_concentration):
        raise PreconditionError("assert weak separation or absence of super-exponential concentration")
    grid = grid or ThetaGrid.uniform()
    note = "= upper box dimension"
    note += " = dim_A (weak separation asserted)" if weak_separation else " (no super-exponential concentration asserted)"
    return SpectrumCurve(grid, np.full(len(grid), float(upper_box)), kind="assouad", closed_form=note, ambient_dim=1)
