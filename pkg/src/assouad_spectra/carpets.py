"""Bedford-McMullen carpets: exact dimensions, spectra and covering counts.

A carpet is fixed by integers ``2 <= m < n`` and a digit set ``D`` of
rectangles ``(i, j)`` in the ``m x n`` grid of the unit square; each digit
carries the map ``(x, y) -> ((x + i) / m, (y + j) / n)``.

Two independent routes to the covering numbers are provided:

* :func:`symbolic_cover_count` evaluates the product of column counts along
  a symbolic word (the approximate-square count);
* :func:`covering_oracle` enumerates construction cylinders geometrically and
  counts the side-``r`` grid boxes that the carpet occupies.

Their log-log slopes agree with the closed forms in :func:`assouad_spectrum`
and :func:`lower_spectrum`.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, InsufficientDataError, ResourceError, ValidationError
from .spectrum_core import DimensionSummary, SpectrumCurve, ThetaGrid, _check_theta

Letter = tuple[int, int]

DEFAULT_LEVEL_CAP = 64


@dataclass(frozen=True)
class CarpetSpec:
    m: int
    n: int
    rects: frozenset

    def __post_init__(self):
        if not (isinstance(self.m, int) and isinstance(self.n, int)):
            raise ValidationError("m and n must be integers")
        if not 2 <= self.m < self.n:
            raise ValidationError(f"need 2 <= m < n, got m={self.m}, n={self.n}")
        rects = frozenset((int(i), int(j)) for i, j in self.rects)
        if len(rects) < 2:
            raise ValidationError("a carpet needs at least two chosen rectangles")
        for i, j in rects:
            if not (0 <= i < self.m and 0 <= j < self.n):
                raise ValidationError(f"rectangle {(i, j)} lies outside the {self.m}x{self.n} grid")
        object.__setattr__(self, "rects", rects)

    @classmethod
    def from_columns(cls, m: int, n: int, columns: dict[int, Sequence[int]]) -> "CarpetSpec":
        """Build a spec from ``{column: [rows...]}``."""
        return cls(m, n, frozenset((i, j) for i, rows in columns.items() for j in rows))

    @classmethod
    def from_dict(cls, data: dict) -> "CarpetSpec":
        try:
            m, n, rects = data["m"], data["n"], data["rects"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"carpet JSON needs keys m, n, rects: {exc}") from None
        if not isinstance(rects, list) or any(
            not isinstance(r, (list, tuple)) or len(r) != 2 or not all(isinstance(v, int) for v in r) for r in rects
        ):
            raise ValidationError("rects must be a list of [i, j] integer pairs")
        if len({tuple(r) for r in rects}) != len(rects):
            raise ValidationError("duplicate rectangles in rects")
        return cls(m, n, frozenset(tuple(r) for r in rects))

    def to_dict(self) -> dict:
        return {"m": self.m, "n": self.n, "rects": [list(r) for r in sorted(self.rects)]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @property
    def ratio(self) -> float:
        """The log-log eccentricity ``log m / log n`` where the phase transition sits."""
        return math.log(self.m) / math.log(self.n)


@dataclass(frozen=True)
class ColumnStats:
    counts: dict
    c_max: int
    c_min: int
    p_card: int
    d_card: int

    @property
    def uniform_fibres(self) -> bool:
        return self.c_max == self.c_min


def column_stats(spec: CarpetSpec) -> ColumnStats:
    counts = {i: 0 for i in range(spec.m)}
    for i, _ in spec.rects:
        counts[i] += 1
    nonempty = [c for c in counts.values() if c > 0]
    return ColumnStats(
        counts=counts,
        c_max=max(nonempty),
        c_min=min(nonempty),
        p_card=len(nonempty),
        d_card=len(spec.rects),
    )


def carpet_dimensions(spec: CarpetSpec) -> DimensionSummary:
    """Assouad, box, Hausdorff, lower and modified lower dimensions."""
    st = column_stats(spec)
    lm, ln = math.log(spec.m), math.log(spec.n)
    proj = math.log(st.p_card) / lm
    box = proj + math.log(st.d_card / st.p_card) / ln
    assouad = proj + math.log(st.c_max) / ln
    lower = proj + math.log(st.c_min) / ln
    # empty columns contribute 0 (0 ** x = 0 for x > 0)
    hausdorff = math.log(sum(c ** (lm / ln) for c in st.counts.values() if c > 0)) / lm
    return DimensionSummary(
        lower=lower,
        lower_box=box,
        upper_box=box,
        assouad=assouad,
        ambient_dim=2,
        hausdorff=hausdorff,
        modified_lower=hausdorff,
    )


def _slope_coefficient(spec: CarpetSpec, c: int) -> float:
    st = column_stats(spec)
    return math.log(st.d_card / c) / math.log(spec.m) + math.log(c) / math.log(spec.n)


def assouad_spectrum(spec: CarpetSpec, theta: float) -> float:
    theta = _check_theta(theta)
    dims = carpet_dimensions(spec)
    if theta >= spec.ratio:
        return dims.assouad
    coeff = _slope_coefficient(spec, column_stats(spec).c_max)
    return min((dims.upper_box - theta * coeff) / (1.0 - theta), dims.assouad)


def lower_spectrum(spec: CarpetSpec, theta: float) -> float:
    theta = _check_theta(theta)
    dims = carpet_dimensions(spec)
    if theta >= spec.ratio:
        return dims.lower
    coeff = _slope_coefficient(spec, column_stats(spec).c_min)
    return max((dims.upper_box - theta * coeff) / (1.0 - theta), dims.lower)


def spectrum_from_dims(ratio: float, dims: DimensionSummary, theta: float) -> tuple[float, float]:
    """Both spectra from ``log m / log n`` and the box, lower and Assouad dimensions alone."""
    if not 0.0 < ratio < 1.0:
        raise DomainError(f"ratio log m / log n must lie in (0, 1), got {ratio}")
    theta = _check_theta(theta)
    box, a, low = dims.upper_box, dims.assouad, dims.lower
    if theta >= ratio:
        return a, low
    upper = (box - theta * (a - (a - box) / ratio)) / (1.0 - theta)
    lower = (box - theta * (low + (box - low) / ratio)) / (1.0 - theta)
    return min(upper, a), max(lower, low)


def assouad_curve(spec: CarpetSpec, grid: ThetaGrid | None = None) -> SpectrumCurve:
    grid = grid or ThetaGrid.uniform()
    st = column_stats(spec)
    return SpectrumCurve(
        grid,
        np.array([assouad_spectrum(spec, t) for t in grid]),
        kind="assouad",
        transitions=[] if st.uniform_fibres else [spec.ratio],
        closed_form=(
            f"min((dim_B - theta*(log({st.d_card}/{st.c_max})/log {spec.m} + log {st.c_max}/log {spec.n}))"
            f"/(1-theta), dim_A)"
        ),
        ambient_dim=2,
    )


def lower_curve(spec: CarpetSpec, grid: ThetaGrid | None = None) -> SpectrumCurve:
    grid = grid or ThetaGrid.uniform()
    st = column_stats(spec)
    return SpectrumCurve(
        grid,
        np.array([lower_spectrum(spec, t) for t in grid]),
        kind="lower",
        transitions=[] if st.uniform_fibres else [spec.ratio],
        closed_form=(
            f"max((dim_B - theta*(log({st.d_card}/{st.c_min})/log {spec.m} + log {st.c_min}/log {spec.n}))"
            f"/(1-theta), dim_L)"
        ),
        ambient_dim=2,
    )


def distinguish(spec_a: CarpetSpec, spec_b: CarpetSpec, grid: ThetaGrid | None = None) -> dict[str, float]:
    """Sup-distance between the two carpets' spectra, per kind.

    A positive value for carpets with identical dimensions certifies that
    they are not bi-Lipschitz equivalent.
    """
    grid = grid or ThetaGrid.uniform()
    return {
        "assouad": float(np.max(np.abs(assouad_curve(spec_a, grid).values - assouad_curve(spec_b, grid).values))),
        "lower": float(np.max(np.abs(lower_curve(spec_a, grid).values - lower_curve(spec_b, grid).values))),
    }


# -- scales and words ------------------------------------------------------------

def _smallest_power_below(r: Fraction, base: int) -> int:
    """Unique l >= 1 with base**-l <= r < base**-(l-1)."""
    level = max(1, math.ceil(-math.log(float(r)) / math.log(base)) - 1)
    while Fraction(1, base ** level) > r:
        level += 1
    while level > 1 and Fraction(1, base ** (level - 1)) <= r:
        level -= 1
    return level


def scale_indices(r: float | Fraction, m: int, n: int) -> tuple[int, int]:
    """The integers ``(l1, l2)`` with ``m**-l1 <= r < m**(1-l1)`` and ``n**-l2 <= r < n**(1-l2)``.

    Comparisons are exact: ``r`` is converted to a :class:`~fractions.Fraction`.
    """
    if not 0 < r < 1:
        raise DomainError(f"scale must lie in (0, 1), got {r!r}")
    rf = Fraction(r)
    return _smallest_power_below(rf, m), _smallest_power_below(rf, n)


@dataclass(frozen=True)
class Word:
    """An eventually periodic word ``prefix + cycle + cycle + ...`` over the digit set.

    With an empty cycle the word is finite.
    """

    prefix: tuple = ()
    cycle: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(tuple(x) for x in self.prefix))
        object.__setattr__(self, "cycle", tuple(tuple(x) for x in self.cycle))

    @classmethod
    def constant(cls, letter: Letter) -> "Word":
        return cls((), (tuple(letter),))

    @property
    def finite(self) -> bool:
        return not self.cycle

    def __len__(self):
        if self.cycle:
            raise TypeError("infinite word has no length")
        return len(self.prefix)

    def letter(self, index: int) -> Letter:
        """The ``index``-th letter, counting from 1."""
        if index < 1:
            raise IndexError("letters are indexed from 1")
        if index <= len(self.prefix):
            return self.prefix[index - 1]
        if not self.cycle:
            raise InsufficientDataError(f"finite word of length {len(self.prefix)} has no letter {index}")
        return self.cycle[(index - len(self.prefix) - 1) % len(self.cycle)]

    def letters(self, count: int) -> list[Letter]:
        return [self.letter(k) for k in range(1, count + 1)]

    def validate(self, spec: CarpetSpec) -> "Word":
        for a in self.prefix + self.cycle:
            if a not in spec.rects:
                raise ValidationError(f"letter {a} is not a chosen rectangle")
        return self


def extremal_word(spec: CarpetSpec, which: str = "max") -> Word:
    """The constant word sitting in a column with ``C_max`` (or ``C_min``) rectangles."""
    st = column_stats(spec)
    target = st.c_max if which == "max" else st.c_min
    col = min(i for i, c in st.counts.items() if c == target)
    row = min(j for i, j in spec.rects if i == col)
    return Word.constant((col, row))


def symbolic_cover_count(spec: CarpetSpec, word: Word, R: float, theta: float) -> int:
    """Approximate-square covering count of ``Q(word, R)`` at scale ``R**(1/theta)``.

    Below the transition (``l1(R) <= l2(r)``) the count is
    ``prod_{l2(R) < l <= l1(R)} C_{i_l} * |D|**(l2(r) - l1(R)) * |pi D|**(l1(r) - l2(r))``;
    above it the middle factor disappears and the product runs to ``l2(r)``.
    """
    theta = _check_theta(theta)
    word.validate(spec)
    st = column_stats(spec)
    R_l1, R_l2 = scale_indices(R, spec.m, spec.n)
    r_l1, r_l2 = scale_indices(float(R) ** (1.0 / theta), spec.m, spec.n)
    top = min(R_l1, r_l2)
    count = 1
    for l in range(R_l2 + 1, top + 1):
        count *= st.counts[word.letter(l)[0]]
    count *= st.d_card ** max(0, r_l2 - R_l1)
    count *= st.p_card ** (r_l1 - max(R_l1, r_l2))
    return count


# -- geometric covering oracle ---------------------------------------------------

def covering_oracle(
    spec: CarpetSpec,
    center: Word,
    R: float,
    r: float,
    level_cap: int = DEFAULT_LEVEL_CAP,
) -> int:
    """Number of side-``r`` grid boxes occupied by the approximate square ``Pi(Q(center, R))``.

    ``r`` is snapped to ``m**-l1(r)`` and the box grid is the square grid of that
    side.  A point is assigned to the column given by the base-``m`` digit
    prefix of its symbolic code and to the row ``floor(y / r)``.

    Construction cylinders inside the approximate square are refined level
    by level.  A cylinder whose carpet points all fall in one row is resolved
    at once: it occupies exactly the columns whose digit strings extend its
    own by digits from the projected digit set.  Only cylinders straddling a
    row boundary are refined further, so the work grows with the number of
    straddlers rather than with the number of boxes.
    """
    center.validate(spec)
    if not 0 < r < R < 1:
        raise DomainError("need 0 < r < R < 1")
    m, n = spec.m, spec.n
    R_l1, R_l2 = scale_indices(R, m, n)
    L1, _ = scale_indices(r, m, n)
    if L1 > level_cap:
        raise ResourceError(f"level l1(r) = {L1} exceeds the cap {level_cap}")
    M = m ** L1  # boxes have side 1 / M

    proj_digits = sorted({i for i, _ in spec.rects})
    rows_of = defaultdict(list)
    for i, j in spec.rects:
        rows_of[i].append(j)
    jmin = min(j for _, j in spec.rects)
    jmax = max(j for _, j in spec.rects)
    p_card = len(proj_digits)

    # cylinders inside Q(center, R) at level l1(R)
    cyls = [(0, 0)]
    for level in range(1, R_l1 + 1):
        i_c, j_c = center.letter(level)
        nxt = []
        for X, Y in cyls:
            if level <= R_l2:
                nxt.append((X * m + i_c, Y * n + j_c))
            else:
                for j in rows_of[i_c]:
                    nxt.append((X * m + i_c, Y * n + j))
        cyls = nxt

    # Inside a level-l cylinder the carpet's y-values fill out
    # [(Y + jmin/(n-1)) / n**l, (Y + jmax/(n-1)) / n**l], both ends attained.
    # Rows are floor(y * M); integer arithmetic throughout.
    pieces: dict[int, set] = defaultdict(set)  # row -> {(level, X)}
    for level in range(R_l1, L1 + 1):
        denom = (n - 1) * n ** level
        unresolved = []
        for X, Y in cyls:
            base = Y * (n - 1)
            row_lo = (base + jmin) * M // denom
            row_hi = (base + jmax) * M // denom
            if row_lo == row_hi:
                pieces[row_lo].add((level, X))
            elif level == L1:
                # shorter than one row, so it meets exactly the two rows of its extreme points
                pieces[row_lo].add((level, X))
                pieces[row_hi].add((level, X))
            else:
                unresolved.append((X, Y))
        if not unresolved:
            break
        cyls = [(X * m + i, Y * n + j) for X, Y in unresolved for i, j in spec.rects]

    total = 0
    for row_pieces in pieces.values():
        by_level = sorted(row_pieces)
        kept: dict[int, set] = defaultdict(set)
        for lev, X in by_level:
            covered = any(X // m ** (lev - k) in xs for k, xs in kept.items() if k <= lev)
            if not covered:
                kept[lev].add(X)
        total += sum(len(xs) * p_card ** (L1 - lev) for lev, xs in kept.items())
    return total


def carpet_oracle(spec: CarpetSpec, level_cap: int = DEFAULT_LEVEL_CAP):
    """Adapter turning :func:`covering_oracle` into the ``oracle(center, R, r)`` form."""

    def oracle(center, R, r):
        return covering_oracle(spec, center, R, r, level_cap=level_cap)

    return oracle


def dyadic_scales(m: int, exponents: Iterable[int]) -> list[float]:
    """Large scales ``m**-k`` for the given exponents, in decreasing order."""
    return sorted((float(m) ** -k for k in exponents), reverse=True)
