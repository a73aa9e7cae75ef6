"""Asymptotic, Banach and lambda-tail densities of sets of positive integers.

For ``X`` a subset of the positive integers and ``lambda > 1`` the upper and
lower lambda-tail densities are the limsup and liminf of

    #(X within [k, lambda k]) / (lambda k - k).

Under the dictionary ``N(i) = 2 if i in X else 1`` these are the Assouad and
lower spectra at ``theta = 1 / lambda`` of a dyadic Moran set, so the general
spectrum bounds turn into density inequalities.  :func:`check_taildensity_props`
tests those inequalities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import DomainError, InsufficientDataError, PreconditionError, ValidationError
from .spectrum_core import TruncatedLimit


@dataclass(frozen=True)
class IntegerSet:
    """A set of positive integers known up to ``horizon`` (``None``: known everywhere).

    ``kind`` is one of ``explicit`` (sorted members), ``periodic`` (``i`` is a
    member iff ``i mod q`` is a residue), ``blocks`` (a union of closed
    integer intervals) or ``mask`` (a boolean membership array).
    """

    kind: str
    members: tuple = ()
    q: int = 1
    residues: frozenset = frozenset()
    intervals: tuple = ()
    mask: np.ndarray | None = field(default=None, compare=False)
    horizon: int | None = None

    # -- constructors ------------------------------------------------------------
    @classmethod
    def explicit(cls, members: Iterable[int], horizon: int | None = None) -> "IntegerSet":
        members = tuple(sorted(set(int(x) for x in members)))
        if members and members[0] < 1:
            raise ValidationError("members must be positive integers")
        if horizon is None:
            horizon = members[-1] if members else 0
        if members and members[-1] > horizon:
            raise ValidationError("a member lies beyond the declared horizon")
        return cls("explicit", members=members, horizon=horizon)

    @classmethod
    def periodic(cls, q: int, residues: Iterable[int]) -> "IntegerSet":
        if q < 1:
            raise ValidationError("period must be positive")
        res = frozenset(int(r) % q for r in residues)
        return cls("periodic", q=q, residues=res, horizon=None)

    @classmethod
    def multiples(cls, q: int) -> "IntegerSet":
        return cls.periodic(q, [0])

    @classmethod
    def naturals(cls) -> "IntegerSet":
        return cls.periodic(1, [0])

    @classmethod
    def empty(cls) -> "IntegerSet":
        return cls.periodic(1, [])

    @classmethod
    def blocks(cls, intervals: Iterable, horizon: int) -> "IntegerSet":
        ivs = tuple(sorted((int(a), int(b)) for a, b in intervals))
        for a, b in ivs:
            if a < 1 or b < a:
                raise ValidationError(f"bad interval [{a}, {b}]")
        return cls("blocks", intervals=ivs, horizon=int(horizon))

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "IntegerSet":
        """``mask[i]`` is membership of ``i``; index 0 is ignored."""
        mask = np.asarray(mask, dtype=bool).copy()
        mask[0] = False
        return cls("mask", mask=mask, horizon=len(mask) - 1)

    @classmethod
    def from_dict(cls, data: dict) -> "IntegerSet":
        if not isinstance(data, dict) or len({"explicit", "periodic", "blocks"} & set(data)) != 1:
            raise ValidationError("IntegerSet JSON needs exactly one of explicit, periodic, blocks")
        try:
            if "explicit" in data:
                return cls.explicit(data["explicit"], data.get("horizon"))
            if "periodic" in data:
                spec = data["periodic"]
                return cls.periodic(int(spec["q"]), spec["residues"])
            spec = data["blocks"]
            return cls.blocks(spec["intervals"], spec["horizon"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed IntegerSet JSON: {exc}") from None

    def to_dict(self) -> dict:
        if self.kind == "explicit":
            return {"explicit": list(self.members), "horizon": self.horizon}
        if self.kind == "periodic":
            return {"periodic": {"q": self.q, "residues": sorted(self.residues)}}
        if self.kind == "blocks":
            return {"blocks": {"intervals": [list(iv) for iv in self.intervals], "horizon": self.horizon}}
        return {"explicit": np.flatnonzero(self.mask).tolist(), "horizon": self.horizon}

    # -- queries -------------------------------------------------------------------
    def indicator(self, K: int) -> np.ndarray:
        """Boolean membership for ``0..K`` (index 0 is always False)."""
        if self.horizon is not None and K > self.horizon:
            raise InsufficientDataError(f"set is only known up to {self.horizon}, asked for {K}")
        out = np.zeros(K + 1, dtype=bool)
        if self.kind == "explicit":
            members = np.asarray(self.members, dtype=np.int64)
            out[members[members <= K]] = True
        elif self.kind == "periodic":
            if self.residues:
                out[1:] = np.isin(np.arange(1, K + 1) % self.q, sorted(self.residues))
        elif self.kind == "blocks":
            for a, b in self.intervals:
                if a <= K:
                    out[a : min(b, K) + 1] = True
        else:
            out[:] = self.mask[: K + 1]
        out[0] = False
        return out

    def prefix_counts(self, K: int) -> np.ndarray:
        """``P[k] = #(X within [1, k])`` for ``k = 0..K``."""
        return np.cumsum(self.indicator(K), dtype=np.int64)

    def complement(self) -> "IntegerSet":
        if self.kind == "periodic":
            return IntegerSet.periodic(self.q, set(range(self.q)) - set(self.residues))
        return IntegerSet.from_mask(~self.indicator(self.horizon))

    @property
    def exact_density(self) -> Fraction | None:
        """The common limit of all six densities, known for periodic sets."""
        if self.kind == "periodic":
            return Fraction(len(self.residues), self.q)
        return None


def window_count(X: IntegerSet, lo: int, hi: int) -> int:
    """``#(X within [lo, hi])`` for integers ``1 <= lo <= hi``."""
    P = X.prefix_counts(hi)
    return int(P[hi] - P[lo - 1])


# -- densities ---------------------------------------------------------------------------

def tail_values(X: IntegerSet, lam: float, K: int) -> np.ndarray:
    """Per-``k`` ratios ``#(X within [k, floor(lam k)]) / (lam k - k)`` for ``k = 1..K``."""
    if lam <= 1:
        raise DomainError(f"lambda must exceed 1, got {lam}")
    ks = np.arange(1, K + 1)
    tops = np.floor(lam * ks).astype(np.int64)
    P = X.prefix_counts(int(tops[-1]))
    return (P[tops] - P[ks - 1]) / (lam * ks - ks)


def tail_densities(X: IntegerSet, lam: float, K: int, tail_fraction: float = 0.2) -> tuple[TruncatedLimit, TruncatedLimit]:
    """Upper and lower lambda-tail densities as truncated limits.

    Read the upper value from ``sup_tail`` and the lower from ``inf_tail``;
    ``exact`` is filled in for periodic sets.
    """
    vals = tail_values(X, lam, K)
    ks = np.arange(1, K + 1)
    exact = X.exact_density
    return (
        TruncatedLimit(ks, vals, tail_fraction, exact=exact),
        TruncatedLimit(ks, vals, tail_fraction, exact=exact),
    )


def asymptotic_densities(X: IntegerSet, K: int, tail_fraction: float = 0.2) -> tuple[TruncatedLimit, TruncatedLimit]:
    """Prefix densities ``#(X within [1, k]) / k`` for ``k = 1..K``."""
    P = X.prefix_counts(K)
    ks = np.arange(1, K + 1)
    vals = P[1:] / ks
    exact = X.exact_density
    return (
        TruncatedLimit(ks, vals, tail_fraction, exact=exact),
        TruncatedLimit(ks, vals, tail_fraction, exact=exact),
    )


def banach_densities(X: IntegerSet, K: int, min_window: int = 1) -> tuple[float, float]:
    """Largest and smallest density over all windows ``[l, k]`` inside ``[1, K]`` of length ``>= min_window``."""
    if min_window < 1:
        raise DomainError("min_window must be at least 1")
    if min_window > K:
        raise InsufficientDataError("no window of the requested length fits")
    P = X.prefix_counts(K)
    hi, lo = 0.0, 1.0
    for length in range(min_window, K + 1):
        counts = P[length:] - P[:-length]
        hi = max(hi, counts.max() / length)
        lo = min(lo, counts.min() / length)
    return float(hi), float(lo)


def exact_limits(X: IntegerSet) -> dict[str, Fraction]:
    """All six limiting densities for a periodic set (each equals residues / period)."""
    dens = X.exact_density
    if dens is None:
        raise PreconditionError("exact limits are available for periodic sets only")
    names = ("upper_asymptotic", "lower_asymptotic", "upper_banach", "lower_banach", "upper_tail", "lower_tail")
    return {name: dens for name in names}


# -- tail-density inequalities ------------------------------------------------------------

@dataclass
class TailReport:
    violations: list = field(default_factory=list)
    windows_checked: int = 0
    variation: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations


def _bounds_ok(D_up, D_lo, B_up, B_lo, Dl_up, Dl_lo, lam, slack):
    """Return the list of failed inequalities for one lambda."""
    bad = []
    if not D_up <= Dl_up + slack:
        bad.append(f"lambda={lam}: upper asymptotic {D_up} > upper tail {Dl_up}")
    cap = min(lam * D_up / (lam - 1), B_up)
    if not Dl_up <= cap + slack:
        bad.append(f"lambda={lam}: upper tail {Dl_up} > {cap}")
    floor_ = max((lam * D_lo - 1) / (lam - 1), B_lo)
    if not floor_ <= Dl_lo + slack:
        bad.append(f"lambda={lam}: lower tail {Dl_lo} < {floor_}")
    if not Dl_lo <= D_lo + slack:
        bad.append(f"lambda={lam}: lower tail {Dl_lo} > lower asymptotic {D_lo}")
    return bad


def check_taildensity_props(
    X: IntegerSet,
    lam_grid: Iterable[float],
    K: int,
    windows: int = 100_000,
    seed: int = 0,
    slack: float | None = None,
    jump_tol: float = 0.1,
    tail_fraction: float = 0.2,
) -> TailReport:
    """Check the tail-density inequalities, continuity in lambda and the complement identity.

    For periodic sets the inequalities are evaluated on exact limits (exact
    rational arithmetic).  Otherwise truncated estimates are used with an
    endpoint slack of ``2 / ((lambda - 1) k0)`` with ``k0`` the first index
    of the trailing window (capped at ``2 / k0``) unless ``slack`` is given;
    for sets built on
    a geometric schedule choose ``tail_fraction`` so the trailing window spans
    a full period of the schedule.  The complement
    identity ``#(X within W) + #(complement within W) = |W|`` is checked on
    ``windows`` random windows inside ``[1, K]``.
    """
    lam_grid = [float(v) for v in lam_grid]
    report = TailReport()
    exact = X.exact_density
    tail_curve = []
    if exact is not None:
        lim = exact_limits(X)
        for lam in lam_grid:
            lamf = Fraction(lam)
            report.violations += _bounds_ok(
                lim["upper_asymptotic"], lim["lower_asymptotic"], lim["upper_banach"], lim["lower_banach"],
                lim["upper_tail"], lim["lower_tail"], lamf, 0,
            )
            tail_curve.append(float(lim["upper_tail"]))
    else:
        top = int(math.floor(max(lam_grid) * K))
        up_a, lo_a = asymptotic_densities(X, K, tail_fraction)
        B_up, B_lo = banach_densities(X, top, min_window=max(1, K // 10))
        for lam in lam_grid:
            up_t, lo_t = tail_densities(X, lam, K, tail_fraction)
            # one endpoint integer moves a window count by one
            k0 = int(up_t.ks[up_t.tail_mask][0])
            eps = 2.0 / (min(lam - 1.0, 1.0) * k0) if slack is None else slack
            report.violations += _bounds_ok(
                up_a.sup_tail, lo_a.inf_tail, B_up, B_lo, up_t.sup_tail, lo_t.inf_tail, lam, eps,
            )
            tail_curve.append(up_t.sup_tail)
    jumps = np.abs(np.diff(tail_curve)) if len(tail_curve) > 1 else np.zeros(0)
    report.variation = float(jumps.sum())
    for lam, jump in zip(lam_grid[1:], jumps):
        if jump > jump_tol:
            report.violations.append(f"tail density jumps by {jump} at lambda={lam}")

    mine = X.prefix_counts(K)
    other = X.complement().prefix_counts(K)
    rng = np.random.default_rng(seed)
    a = rng.integers(1, K + 1, size=windows)
    b = rng.integers(1, K + 1, size=windows)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    total = (mine[hi] - mine[lo - 1]) + (other[hi] - other[lo - 1])
    bad = np.flatnonzero(total != hi - lo + 1)
    for i in bad[:10]:
        report.violations.append(f"complement identity fails on [{lo[i]}, {hi[i]}]")
    report.windows_checked = windows
    return report
