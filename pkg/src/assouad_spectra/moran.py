"""Homogeneous Moran constructions and the dyadic {1, 2} calculus.

A homogeneous Moran set is built level by level: every level-``k`` cylinder
is a copy of the previous ones scaled by ``c(k)``, and each vertex of the
construction tree has its own number of children.  With
``S_k = -sum_{i <= k} log c(i)`` and ``l(theta, k)`` the largest ``l`` with
``S_l <= S_k / theta``,

    dim_A^theta = limsup_k max_v log N(v, l - k) / ((1/theta - 1) S_k),

where ``N(v, j)`` counts descendants of ``v`` that are ``j`` levels down; the
lower spectrum uses the liminf of the minimum.  Limits are reported as
:class:`~assouad_spectra.spectrum_core.TruncatedLimit` objects.

Branching convention: ``N(i)`` is the number of children each level-``(i-1)``
vertex has at level ``i``, so ``N(v, l - k) = prod_{i=k+1}^{l} N(i)`` in the
uniform case.

For ``c = 1/2`` and ``N(i)`` in ``{1, 2}`` the partials reduce to
``T(k, theta) / (k/theta - k)`` with ``T`` the number of 2s at indices
``k+1..floor(k/theta)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InsufficientDataError, ScheduleError, StructuralError, ValidationError
from .spectrum_core import DimensionSummary, SpectrumCurve, ThetaGrid, TruncatedLimit, _check_theta
from .tail_density import IntegerSet, banach_densities

LOG_TOL = 1e-13
TAIL_FRACTION = 0.2
FEASIBILITY_PREFIX = 10_000


def _as_generator(value, name: str):
    """Constant, finite sequence or callable ``k -> value`` to ``(func, horizon)``."""
    if callable(value):
        return (lambda ks: np.asarray([value(int(k)) for k in ks], dtype=float)), None
    if np.ndim(value) == 0:
        const = float(value)
        return (lambda ks: np.full(len(ks), const)), None
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"{name} must be a constant, a nonempty sequence or a callable")
    return (lambda ks: arr[np.asarray(ks) - 1]), arr.size


@dataclass
class MoranSpec:
    """Contractions ``c(k)`` and branching data of a homogeneous Moran construction.

    Build instances with :meth:`uniform` or :meth:`from_tree`.  ``horizon`` is
    the deepest level for which the data is known (``None``: unbounded).
    """

    c_func: Callable
    c_floor: float
    N_func: Callable | None = None
    tree: list | None = None
    horizon: int | None = None
    d: int = 1
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def uniform(cls, c, N, c_floor: float | None = None, horizon: int | None = None, d: int = 1) -> "MoranSpec":
        """Every level-``(k-1)`` vertex has ``N(k)`` children scaled by ``c(k)``.

        ``c`` and ``N`` may be constants, sequences indexed from level 1 or
        callables.
        """
        c_func, c_h = _as_generator(c, "c")
        N_func, N_h = _as_generator(N, "N")
        known = [h for h in (c_h, N_h, horizon) if h is not None]
        horizon = min(known) if known else None
        probe = np.arange(1, min(horizon or FEASIBILITY_PREFIX, FEASIBILITY_PREFIX) + 1)
        cs = c_func(probe)
        if c_floor is None:
            c_floor = float(cs.min())
        spec = cls(c_func=c_func, c_floor=float(c_floor), N_func=N_func, horizon=horizon, d=d)
        spec._validate(probe, cs, N_func(probe))
        return spec

    @classmethod
    def from_tree(cls, c, children: Sequence[Sequence[int]], c_floor: float | None = None, d: int = 1) -> "MoranSpec":
        """Explicit tree: ``children[k][v]`` is the child count of vertex ``v`` at level ``k``.

        Level ``k + 1`` lists the children of level ``k`` in order, so
        ``len(children[k + 1]) == sum(children[k])``.
        """
        levels = [np.asarray(row, dtype=np.int64) for row in children]
        if not levels or levels[0].size != 1:
            raise StructuralError("the root level must contain exactly one vertex")
        for k in range(1, len(levels)):
            if levels[k].size != levels[k - 1].sum():
                raise StructuralError(f"level {k} has {levels[k].size} vertices, expected {levels[k - 1].sum()}")
        c_func, c_h = _as_generator(c, "c")
        # the horizon limits the contractions; the tree depth is checked when spectra are read
        known = len(levels) if c_h is None else min(len(levels), c_h)
        probe = np.arange(1, known + 1)
        cs = c_func(probe)
        if c_floor is None:
            c_floor = float(cs.min())
        spec = cls(c_func=c_func, c_floor=float(c_floor), tree=levels, horizon=c_h, d=d)
        spec._validate(probe, cs, np.array([lev.max() for lev in levels[:known]]))
        for lev in levels:
            if lev.min() < 1:
                raise ValidationError("every vertex needs at least one child")
        return spec

    def _validate(self, ks, cs, Ns):
        if not 0 < self.c_floor:
            raise ValidationError("the contraction floor must be positive")
        if np.any(cs < self.c_floor - 1e-15) or np.any(cs >= 1):
            raise ValidationError(f"contractions must lie in [{self.c_floor}, 1)")
        if np.any(Ns < 1) or np.any(Ns != np.round(Ns)):
            raise ValidationError("branching numbers must be positive integers")
        room = np.floor(1.0 / cs + 1e-12) ** self.d
        bad = np.flatnonzero(Ns > room)
        if bad.size:
            k = int(ks[bad[0]])
            warnings.warn(
                f"level {k}: {int(Ns[bad[0]])} children do not fit as scaled copies "
                f"(at most {int(room[bad[0]])} in dimension {self.d}); spectra use the tree data only",
                stacklevel=3,
            )

    @property
    def is_uniform(self) -> bool:
        return self.tree is None

    def _need(self, L: int):
        if self.horizon is not None and L > self.horizon:
            raise InsufficientDataError(f"construction known to level {self.horizon}, need level {L}")

    def log_scales(self, L: int) -> np.ndarray:
        """``S[k] = -sum_{i<=k} log c(i)`` for ``k = 0..L``."""
        self._need(L)
        cached = self._cache.get("S")
        if cached is None or cached.size < L + 1:
            S = np.concatenate([[0.0], np.cumsum(-np.log(self.c_func(np.arange(1, L + 1))))])
            self._cache["S"] = S
            return S
        return cached[: L + 1]

    def log_branch(self, L: int) -> np.ndarray:
        """``G[k] = sum_{i<=k} log N(i)`` for uniform specs."""
        self._need(L)
        cached = self._cache.get("G")
        if cached is None or cached.size < L + 1:
            G = np.concatenate([[0.0], np.cumsum(np.log(self.N_func(np.arange(1, L + 1))))])
            self._cache["G"] = G
            return G
        return cached[: L + 1]


def _depths(spec: MoranSpec, theta: float, ks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``l(theta, k)`` for every k, plus the scale array used."""
    target_k = int(ks.max())
    L = max(2 * target_k, 16)
    while True:
        if spec.horizon is not None:
            L = min(L, spec.horizon)
        S = spec.log_scales(L)
        targets = S[ks] / theta * (1.0 + LOG_TOL)
        if S[-1] > targets.max():
            break
        if spec.horizon is not None and L == spec.horizon:
            raise InsufficientDataError(
                f"construction known to level {spec.horizon}, which does not reach l(theta, {target_k})"
            )
        L *= 2
    ls = np.searchsorted(S, targets, side="right") - 1
    return ls, S


def l_theta_k(spec: MoranSpec, theta: float, k: int) -> int:
    """Largest ``l`` with ``prod_{i<=l} c(i) >= (prod_{i<=k} c(i)) ** (1/theta)``."""
    theta = _check_theta(theta)
    if k < 1:
        raise DomainError("k must be at least 1")
    ls, _ = _depths(spec, theta, np.array([k]))
    return int(ls[0])


def _descendant_logs(spec: MoranSpec, k: int, l: int) -> np.ndarray:
    """``log N(v, l - k)`` for every vertex ``v`` on level ``k`` of an explicit tree."""
    counts = np.ones(spec.tree[l].size if l < len(spec.tree) else int(spec.tree[l - 1].sum()), dtype=np.int64)
    for level in range(l - 1, k - 1, -1):
        kids = spec.tree[level]
        starts = np.concatenate([[0], np.cumsum(kids)[:-1]])
        counts = np.add.reduceat(counts, starts)
    return np.log(counts.astype(float))


def _partials(spec: MoranSpec, theta: float, K: int, pick) -> np.ndarray:
    ks = np.arange(1, K + 1)
    ls, S = _depths(spec, theta, ks)
    denom = (1.0 / theta - 1.0) * S[ks]
    if spec.is_uniform:
        G = spec.log_branch(int(ls.max()))
        return (G[ls] - G[ks]) / denom
    if ls.max() > len(spec.tree):
        raise InsufficientDataError(f"tree has depth {len(spec.tree)}, need {int(ls.max())}")
    return np.array([pick(_descendant_logs(spec, int(k), int(l))) for k, l in zip(ks, ls)]) / denom


def assouad_spectrum_trunc(spec: MoranSpec, theta: float, K: int, tail_fraction: float = TAIL_FRACTION) -> TruncatedLimit:
    """Partials ``max_v log N(v, l(theta,k) - k) / ((1/theta - 1) S_k)`` for ``k = 1..K``; read ``sup_tail``."""
    theta = _check_theta(theta)
    return TruncatedLimit(np.arange(1, K + 1), _partials(spec, theta, K, np.max), tail_fraction)


def lower_spectrum_trunc(spec: MoranSpec, theta: float, K: int, tail_fraction: float = TAIL_FRACTION) -> TruncatedLimit:
    """As :func:`assouad_spectrum_trunc` with the minimum over vertices; read ``inf_tail``."""
    theta = _check_theta(theta)
    return TruncatedLimit(np.arange(1, K + 1), _partials(spec, theta, K, np.min), tail_fraction)


def uniform_spectrum_trunc(c_seq, N_seq, theta: float, K: int, tail_fraction: float = TAIL_FRACTION) -> TruncatedLimit:
    """``log prod_{i=k+1}^{l(theta,k)} N(i) / ((1 - 1/theta) log prod_{i<=k} c(i))``."""
    return assouad_spectrum_trunc(MoranSpec.uniform(c_seq, N_seq), theta, K, tail_fraction)


# -- dyadic sequences -------------------------------------------------------------------------

@dataclass(frozen=True)
class DyadicSequence:
    """Values ``N(1), N(2), ...`` in ``{1, 2}``, stored from index 1."""

    values: np.ndarray = field(compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.int8)
        if vals.ndim != 1 or not np.all((vals == 1) | (vals == 2)):
            raise ValidationError("dyadic sequence values must be 1 or 2")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return isinstance(other, DyadicSequence) and np.array_equal(self.values, other.values)

    @classmethod
    def from_twos(cls, positions, length: int) -> "DyadicSequence":
        vals = np.ones(length, dtype=np.int8)
        pos = np.asarray(list(positions), dtype=np.int64)
        pos = pos[(pos >= 1) & (pos <= length)]
        vals[pos - 1] = 2
        return cls(vals)

    @classmethod
    def periodic(cls, pattern: Sequence[int], length: int) -> "DyadicSequence":
        reps = -(-length // len(pattern))
        return cls(np.tile(np.asarray(pattern, dtype=np.int8), reps)[:length])

    def twos(self) -> IntegerSet:
        return IntegerSet.from_mask(np.concatenate([[False], self.values == 2]))

    def prefix_twos(self) -> np.ndarray:
        """``P[k]`` = number of 2s among ``N(1..k)``."""
        return np.concatenate([[0], np.cumsum(self.values == 2)])

    def window_twos(self, k: int, theta: float) -> tuple[int, int]:
        """``(T(k, theta), window length)`` for the window ``k+1..floor(k/theta)``."""
        theta = _check_theta(theta)
        top = math.floor(k / theta * (1.0 + LOG_TOL))
        if top > len(self):
            raise InsufficientDataError(f"sequence has length {len(self)}, need {top}")
        P = self.prefix_twos()
        return int(P[top] - P[k]), top - k


def dyadic_spec(seq: DyadicSequence) -> MoranSpec:
    """Dyadic intervals: ``c = 1/2`` with the sequence as branching numbers."""
    return MoranSpec.uniform(0.5, seq.values.astype(float), c_floor=0.5)


def invert(seq: DyadicSequence) -> DyadicSequence:
    """Swap the roles of 1 and 2."""
    return DyadicSequence((3 - seq.values).astype(np.int8))


def dyadic_densities(seq: DyadicSequence, K: int, min_window: int = 1, tail_fraction: float = TAIL_FRACTION) -> dict:
    """Truncated box, Assouad and lower dimensions of the dyadic Moran set.

    The box dimensions are the sup and inf of prefix densities over the
    trailing window.  The Assouad and lower dimensions are the extremal
    densities over all windows of length ``>= min_window`` in ``[1, K]``.
    """
    if K > len(seq):
        raise InsufficientDataError(f"sequence has length {len(seq)}, need {K}")
    P = seq.prefix_twos()
    ks = np.arange(1, K + 1)
    prefix = TruncatedLimit(ks, P[1 : K + 1] / ks, tail_fraction)
    upper, lower = banach_densities(seq.twos(), K, min_window)
    return {"upper_box": prefix.sup_tail, "lower_box": prefix.inf_tail, "assouad": upper, "lower": lower}


def _schedule(f) -> Callable[[int], int]:
    if callable(f):
        return f
    base = int(f)
    if base < 2:
        raise ScheduleError("a geometric schedule needs base >= 2")
    return lambda k: base ** k


def recipe_blocks(lam: float, f, length: int) -> list[tuple[int, int]]:
    """Blocks ``[f(k), floor(lam f(k))]`` for ``k = 1, 2, ...`` starting within ``length``."""
    if lam <= 1:
        raise DomainError("lambda must exceed 1")
    f = _schedule(f)
    blocks = []
    k = 1
    while True:
        start = int(f(k))
        if start > length:
            break
        end = math.floor(lam * start)
        if blocks and start <= blocks[-1][1]:
            raise ScheduleError(f"block {k} starting at {start} overlaps the previous block ending at {blocks[-1][1]}")
        if blocks and start <= blocks[-1][0]:
            raise ScheduleError("the schedule must be strictly increasing")
        blocks.append((start, end))
        k += 1
    return blocks


def recipe_sequence(t: float, lam: float, f=8, length: int = 10_000) -> DyadicSequence:
    """All 1s except inside the blocks, where ``floor(L t)`` evenly spread 2s sit in each block of length ``L``.

    ``f`` is a callable schedule ``k -> f(k)`` or an integer base ``b`` for ``f(k) = b**k``.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1]")
    vals = np.ones(length, dtype=np.int8)
    for start, end in recipe_blocks(lam, f, length):
        L = end - start + 1
        cnt = math.floor(L * t)
        if cnt == 0:
            continue
        pos = start + (np.arange(cnt) * L) // cnt
        pos = pos[pos <= length]
        vals[pos - 1] = 2
    return DyadicSequence(vals)


def recipe_dimensions(t: float, lam: float) -> DimensionSummary:
    return DimensionSummary(lower=0.0, lower_box=0.0, upper_box=t * (lam - 1.0) / lam, assouad=t, ambient_dim=1)


def recipe_spectrum(t: float, lam: float, theta: float) -> float:
    """``min((t/lam)(lam - 1) / (1 - theta), t)``."""
    theta = _check_theta(theta)
    return min(t * (lam - 1.0) / lam / (1.0 - theta), t)


def recipe_transition(lam: float) -> float:
    """Where ``(t/lam)(lam - 1)/(1 - theta) = t``: at ``theta = 1/lam`` for every ``t > 0``."""
    return 1.0 / lam


def recipe_curve(t: float, lam: float, grid: ThetaGrid | None = None) -> SpectrumCurve:
    grid = grid or ThetaGrid.uniform()
    return SpectrumCurve(
        grid,
        np.array([recipe_spectrum(t, lam, th) for th in grid]),
        kind="assouad",
        transitions=[recipe_transition(lam)] if t > 0 else [],
        closed_form=f"min(({t:g}/{lam:g})*({lam:g}-1)/(1-theta), {t:g})",
        ambient_dim=1,
    )


def inverted_lower_curve(curve: SpectrumCurve) -> SpectrumCurve:
    """Lower spectrum ``1 - dim_A^theta`` of the inverted construction."""
    if curve.kind != "assouad":
        raise StructuralError("expected an Assouad spectrum curve")
    return SpectrumCurve(
        curve.grid,
        1.0 - curve.values,
        kind="lower",
        transitions=list(curve.transitions),
        closed_form=None if curve.closed_form is None else f"1 - ({curve.closed_form})",
        ambient_dim=1,
    )


def sharpness_sequence(length: int, f: Callable[[int], int] | None = None) -> DyadicSequence:
    """Alternating ``1, 2, 1, 2, ...`` with a run of ``n`` 1s then ``n`` 2s written at ``f(n)``.

    The default schedule ``f(n) = 4**n`` keeps runs disjoint.
    """
    f = f or (lambda n: 4 ** n)
    vals = np.where(np.arange(1, length + 1) % 2 == 0, 2, 1).astype(np.int8)
    n = 1
    while f(n) <= length:
        start = f(n)
        run = np.concatenate([np.ones(n, dtype=np.int8), np.full(n, 2, dtype=np.int8)])
        stop = min(start + 2 * n - 1, length)
        vals[start - 1 : stop] = run[: stop - start + 1]
        n += 1
    return DyadicSequence(vals)


def union_curves(curves: Sequence[SpectrumCurve]) -> SpectrumCurve:
    """Spectrum of a finite union: pointwise max (Assouad) or min (lower).

    A transition of an input survives when that input attains the extremum
    at the grid point nearest to it.
    """
    curves = list(curves)
    if not curves:
        raise StructuralError("need at least one curve")
    grid, kind = curves[0].grid, curves[0].kind
    for c in curves[1:]:
        if c.grid != grid:
            raise StructuralError("curves live on different grids")
        if c.kind != kind:
            raise StructuralError("cannot mix Assouad and lower curves")
    stack = np.vstack([c.values for c in curves])
    values = stack.max(axis=0) if kind == "assouad" else stack.min(axis=0)
    thetas = grid.asarray()
    kept = []
    for c in curves:
        for tr in c.transitions:
            i = int(np.argmin(np.abs(thetas - tr)))
            if abs(c.values[i] - values[i]) <= 1e-12 and tr not in kept:
                kept.append(tr)
    dims = [c.ambient_dim for c in curves if c.ambient_dim is not None]
    return SpectrumCurve(grid, values, kind=kind, transitions=sorted(kept), ambient_dim=max(dims) if dims else None)


def zero_curve(grid: ThetaGrid | None = None, kind: str = "assouad") -> SpectrumCurve:
    grid = grid or ThetaGrid.uniform()
    return SpectrumCurve(grid, np.zeros(len(grid)), kind=kind, closed_form="0", ambient_dim=1)


# -- JSON ----------------------------------------------------------------------------------

def spec_from_dict(data: dict, length: int = 100_000) -> MoranSpec:
    """Build a spec from ``{"c": {...}, "N": {...}}``.

    ``c`` is ``{"constant": x}`` or ``{"sequence": [...]}``; ``N`` is one of
    ``{"constant": n}``, ``{"sequence": [...]}``, ``{"dyadic_set": [indices]}``
    or ``{"recipe": {"t", "lambda", "f_base"}}``.  Dyadic sets and recipes are
    materialised to ``length`` levels.
    """
    try:
        c, N = data["c"], data["N"]
        if "constant" in c:
            c_val = float(c["constant"])
        elif "sequence" in c:
            c_val = [float(x) for x in c["sequence"]]
        else:
            raise ValidationError("c needs 'constant' or 'sequence'")
        if "constant" in N:
            N_val = int(N["constant"])
        elif "sequence" in N:
            N_val = [int(x) for x in N["sequence"]]
        elif "dyadic_set" in N:
            N_val = DyadicSequence.from_twos(N["dyadic_set"], length).values
        elif "recipe" in N:
            r = N["recipe"]
            N_val = recipe_sequence(float(r["t"]), float(r["lambda"]), int(r.get("f_base", 8)), length).values
        else:
            raise ValidationError("N needs 'constant', 'sequence', 'dyadic_set' or 'recipe'")
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed Moran JSON: {exc}") from None
    return MoranSpec.uniform(c_val, N_val)
