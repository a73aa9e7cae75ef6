"""Mandelbrot percolation: sampling, exact Galton-Watson moments and probability bounds.

Start from the unit cube in ``R^d``, split it into ``n**d`` subcubes, keep
each independently with probability ``p`` and repeat inside every kept cube.
Conditioned on survival the limit set has box dimension
``B = log(p n**d) / log n`` and its Assouad spectrum equals ``B`` for every
theta.

The number ``Y_k`` of kept cubes at level ``k`` is a Galton-Watson process
with Binomial(n**d, p) offspring.  Its moments are polynomials in
``mu**k``; :func:`gw_moment_table` computes the coefficients exactly and
:func:`exact_gw_distribution` provides an independent check by convolving
probability generating functions.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError, ExtinctionError, InsufficientDataError, ResourceError, ValidationError
from .spectrum_core import _check_theta

SUPPORT_CAP = 4096
POWER_SUM_CAP = 12

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


@dataclass(frozen=True)
class PercolationParams:
    n: int
    d: int
    p: float

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ValidationError("n must be an integer >= 2")
        if not isinstance(self.d, int) or self.d < 1:
            raise ValidationError("d must be a positive integer")
        if not 0.0 < float(self.p) <= 1.0:
            raise ValidationError("p must lie in (0, 1]")

    @property
    def children(self) -> int:
        return self.n ** self.d

    @property
    def mu(self) -> float:
        return float(self.p) * self.children

    @property
    def supercritical(self) -> bool:
        return self.mu > 1.0


def box_dimension(params: PercolationParams) -> float:
    """``log(p n**d) / log n``; requires ``p n**d > 1``."""
    if not params.supercritical:
        raise DomainError(f"p * n**d = {params.mu} <= 1: the process dies out almost surely")
    return math.log(params.mu) / math.log(params.n)


# -- exact moments -------------------------------------------------------------------

def _exact(x) -> Fraction:
    """Floats enter through their shortest decimal form, so 0.8 becomes 4/5."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


@dataclass(frozen=True)
class OffspringMoments:
    """Raw moments ``(mu_1, ..., mu_K)`` of the offspring law."""

    raw: tuple

    def __post_init__(self):
        raw = tuple(_exact(v) for v in self.raw)
        if not raw:
            raise ValidationError("need at least one moment")
        if raw[0] <= 0:
            raise ValidationError("mu_1 must be positive")
        if len(raw) > 1 and raw[1] < raw[0] ** 2:
            raise ValidationError("inconsistent moments: mu_2 < mu_1**2")
        object.__setattr__(self, "raw", raw)

    def __len__(self):
        return len(self.raw)

    def __getitem__(self, k: int) -> Fraction:
        """``mu_k`` with 1-based ``k``."""
        return self.raw[k - 1]

    @classmethod
    def from_pmf(cls, pmf: Sequence, K: int) -> "OffspringMoments":
        pmf = [_exact(q) for q in pmf]
        return cls(tuple(sum(q * x ** k for x, q in enumerate(pmf)) for k in range(1, K + 1)))


def binomial_pmf(count: int, p) -> list[Fraction]:
    p = _exact(p)
    return [math.comb(count, x) * p ** x * (1 - p) ** (count - x) for x in range(count + 1)]


def binomial_moments(count: int, p, K: int, cap: int = SUPPORT_CAP) -> OffspringMoments:
    """Raw moments of Binomial(count, p) by exact summation over the support."""
    if K < 1:
        raise DomainError("K must be at least 1")
    if count + 1 > cap:
        raise ResourceError(f"support of size {count + 1} exceeds the cap {cap}")
    return OffspringMoments.from_pmf(binomial_pmf(count, p), K)


def _partitions(k: int, largest: int | None = None):
    """Integer partitions of k as non-increasing tuples."""
    largest = k if largest is None else largest
    if k == 0:
        yield ()
        return
    for part in range(min(k, largest), 0, -1):
        for rest in _partitions(k - part, part):
            yield (part,) + rest


def _stirling_first(k: int) -> list[list[int]]:
    """Signed Stirling numbers s(j, i): (y)_j = sum_i s(j, i) y**i."""
    s = [[0] * (k + 1) for _ in range(k + 1)]
    s[0][0] = 1
    for j in range(1, k + 1):
        for i in range(1, j + 1):
            s[j][i] = s[j - 1][i - 1] - (j - 1) * s[j - 1][i]
    return s


def expand_power_sum(moments: OffspringMoments, k: int, cap: int = POWER_SUM_CAP) -> list[Fraction]:
    """Coefficients ``b_0..b_k`` with ``E[(X_1 + ... + X_y)**k] = sum_i b_i y**i``.

    Grouping the ``k`` factors by which summand they hit gives a set
    partition; a partition into ``j`` blocks of sizes ``k_1..k_j`` contributes
    ``(y)_j * mu_{k_1} ... mu_{k_j}``, where ``(y)_j`` is the falling
    factorial.  Set partitions are counted per block-size multiset and the
    falling factorials are expanded with Stirling numbers of the first kind.
    """
    if k < 1:
        raise DomainError("k must be at least 1")
    if k > cap:
        raise ResourceError(f"order {k} exceeds the cap {cap}")
    if len(moments) < k:
        raise InsufficientDataError(f"need {k} moments, have {len(moments)}")
    falling = [Fraction(0)] * (k + 1)  # coefficient of (y)_j
    for part in _partitions(k):
        ways = math.factorial(k)
        for size in part:
            ways //= math.factorial(size)
        for mult in Counter(part).values():
            ways //= math.factorial(mult)
        term = Fraction(ways)
        for size in part:
            term *= moments[size]
        falling[len(part)] += term
    stir = _stirling_first(k)
    return [sum(falling[j] * stir[j][i] for j in range(i, k + 1)) for i in range(k + 1)]


@dataclass(frozen=True)
class GWMomentTable:
    """Coefficients with ``E[Y_n**k] = sum_i a[k][i] * mu**(i n)`` (1-based ``k`` and ``i``)."""

    coeffs: tuple
    mu: Fraction

    @property
    def K(self) -> int:
        return len(self.coeffs) - 1

    def a(self, k: int, i: int) -> Fraction:
        return self.coeffs[k][i]

    def moment(self, k: int, n: int) -> Fraction:
        if not 1 <= k <= self.K:
            raise DomainError(f"moment order {k} outside the table (K={self.K})")
        return sum(self.coeffs[k][i] * self.mu ** (i * n) for i in range(1, k + 1))

    def row_sum(self, k: int) -> Fraction:
        return sum(self.coeffs[k][1 : k + 1])


def gw_moment_table(moments: OffspringMoments, K: int) -> GWMomentTable:
    """Exact coefficients of ``E[Y_n**k]`` as polynomials in ``mu**n``.

    Conditioning on ``Y_n`` gives ``E[Y_{n+1}**N] = sum_i b_i E[Y_n**i]``
    with ``b_N = mu**N``.  Unrolling the recursion and summing the geometric
    series yields, for ``j < N``,

        a_{Nj} = mu**-j * sum_{i=j}^{N-1} b_i a_{ij} / (1 - mu**(N-j)),

    and the leading coefficient follows from ``E[Y_1**N] = mu_N``.
    """
    if K < 1:
        raise DomainError("K must be at least 1")
    if len(moments) < K:
        raise InsufficientDataError(f"need {K} moments, have {len(moments)}")
    mu = moments[1]
    if mu <= 1:
        raise DomainError(f"mu = {float(mu)} <= 1: the recursion needs a supercritical process")
    coeffs: list[list[Fraction]] = [[Fraction(0)], [Fraction(0), Fraction(1)]]
    for N in range(2, K + 1):
        b = expand_power_sum(moments, N)
        row = [Fraction(0)] * (N + 1)
        for j in range(1, N):
            acc = sum(b[i] * coeffs[i][j] for i in range(j, N))
            row[j] = acc / (1 - mu ** (N - j)) / mu ** j
        row[N] = (moments[N] - sum(row[j] * mu ** j for j in range(1, N))) / mu ** N
        coeffs.append(row)
    return GWMomentTable(coeffs=tuple(tuple(r) for r in coeffs), mu=mu)


def exact_gw_distribution(pmf: Sequence, depth: int, max_support: int = 10, max_depth: int = 6) -> list[Fraction]:
    """Exact law of ``Y_depth`` (with ``Y_0 = 1``) by composing generating functions.

    ``pmf[x]`` is the probability of ``x`` offspring.  The result is indexed
    by population size.
    """
    pmf = [_exact(q) for q in pmf]
    if len(pmf) > max_support or depth > max_depth:
        raise ResourceError(f"support {len(pmf)} / depth {depth} exceed caps {max_support} / {max_depth}")
    if depth < 0:
        raise DomainError("depth must be nonnegative")
    law = [Fraction(0), Fraction(1)]
    for _ in range(depth):
        nxt = [Fraction(0)]
        power = [Fraction(1)]  # pmf convolved y times
        for y, weight in enumerate(law):
            if y > 0:
                power = _convolve(power, pmf)
            if weight:
                if len(nxt) < len(power):
                    nxt.extend([Fraction(0)] * (len(power) - len(nxt)))
                for z, q in enumerate(power):
                    nxt[z] += weight * q
        law = nxt
    return law


def _convolve(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def pmf_moment(law: Sequence, k: int) -> Fraction:
    return sum(q * y ** k for y, q in enumerate(law))


# -- sampling ---------------------------------------------------------------------------

def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser on uint64 arrays (wrapping arithmetic)."""
    z = (z + np.uint64(0x9E3779B97F4A7C15)) & _MASK
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK
    return z ^ (z >> np.uint64(31))


def cube_uniforms(seed: int, level: int, coords: np.ndarray) -> np.ndarray:
    """Uniform draws keyed by ``(seed, level, cube coordinates)``.

    The value for a cube does not depend on which other cubes are queried or
    in which order, so any subtree can be resampled on its own.
    """
    coords = np.asarray(coords, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix(np.full(coords.shape[0], np.uint64(seed & 0xFFFFFFFFFFFFFFFF)) ^ _mix(np.full(coords.shape[0], np.uint64(level))))
        for axis in range(coords.shape[1]):
            h = _mix(h ^ coords[:, axis])
    return (h >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


@dataclass
class PercolationSample:
    """Selected cubes per level; ``levels[k]`` is an ``(count, d)`` array of integer coordinates."""

    seed: int
    depth: int
    params: PercolationParams
    levels: list

    def counts(self) -> list[int]:
        return [len(lev) for lev in self.levels]

    @property
    def survived(self) -> bool:
        return len(self.levels[-1]) > 0


def sample(params: PercolationParams, depth: int, seed: int) -> PercolationSample:
    """Grow the selection tree to ``depth`` with path-keyed randomness."""
    if depth < 1:
        raise DomainError("depth must be at least 1")
    n, d = params.n, params.d
    offsets = np.array(np.meshgrid(*[np.arange(n)] * d, indexing="ij")).reshape(d, -1).T.astype(np.int64)
    levels = [np.zeros((1, d), dtype=np.int64)]
    for level in range(1, depth + 1):
        parents = levels[-1]
        if len(parents) == 0:
            levels.append(parents)
            continue
        kids = (parents[:, None, :] * n + offsets[None, :, :]).reshape(-1, d)
        keep = cube_uniforms(seed, level, kids) < float(params.p)
        levels.append(kids[keep])
    return PercolationSample(seed=seed, depth=depth, params=params, levels=levels)


def trial_seed(seed: int, trial: int) -> int:
    return int(_mix(np.array([(seed * 1_000_003 + trial) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0])


# -- probability bounds ---------------------------------------------------------------------

def g_cube_bound(params: PercolationParams, s: int, k: float, M: float, N: int, table: GWMomentTable) -> float:
    """Markov bound ``mu**s * E[Y_[k]**N] / M**N`` on the chance of a G(s, k, M)-cube.

    A G(s, k, M)-cube is a selected level-``s`` cube with at least ``M``
    selected descendants ``floor(k)`` levels further down; ``mu**s`` equals
    ``n**(B s)``, the expected number of level-``s`` cubes.
    """
    if not 1 <= N <= table.K:
        raise DomainError(f"moment order {N} outside the table (K={table.K})")
    if M <= 0:
        raise DomainError("M must be positive")
    depth = math.floor(k)
    return float(params.mu) ** s * float(table.moment(N, depth)) / float(M) ** N


def g_cube_frequency(params: PercolationParams, s: int, k: float, M: float, trials: int, seed: int) -> float:
    """Monte-Carlo frequency of at least one G(s, k, M)-cube."""
    depth = s + math.floor(k)
    hits = 0
    for trial in range(trials):
        smp = sample(params, depth, trial_seed(seed, trial))
        if smp.levels[depth].shape[0] == 0:
            continue
        if _max_descendants(smp, s, depth) >= M:
            hits += 1
    return hits / trials


def borel_cantelli_exponent(B: float, B1: float, N: int, theta: float) -> float:
    """Exponent ``B + B N (1/theta - 1) - N B1 (1/theta - 1)``; negative means summable."""
    theta = _check_theta(theta)
    if N < 1 or B1 <= 0:
        raise DomainError("need N >= 1 and B1 > 0")
    q = 1.0 / theta - 1.0
    return B + B * N * q - N * B1 * q


def implied_spectrum_bound(B: float, N: int, theta: float) -> float:
    """Smallest ``B1`` making the exponent nonpositive: ``B + B theta / (N (1 - theta))``."""
    theta = _check_theta(theta)
    return B + B * theta / (N * (1.0 - theta))


# -- Monte-Carlo spectrum ------------------------------------------------------------------------

def _max_descendants(smp: PercolationSample, s: int, depth: int) -> int:
    n, d = smp.params.n, smp.params.d
    anc = smp.levels[depth] // n ** (depth - s)
    key = np.ravel_multi_index(tuple(anc.T), (n ** s,) * d)
    return int(np.bincount(key).max())


@dataclass
class MCEstimate:
    value: float
    spread: float
    survival_fraction: float
    per_trial: np.ndarray
    box_dimension: float

    def to_dict(self) -> dict:
        return {
            "B": self.box_dimension,
            "estimate": self.value,
            "spread": self.spread,
            "survival_fraction": self.survival_fraction,
        }


def empirical_spectrum_mc(
    params: PercolationParams,
    theta: float,
    depth: int,
    trials: int,
    seed: int,
    bootstrap: int = 1000,
) -> MCEstimate:
    """Average over surviving trials of the maximal local growth exponent.

    With ``s = floor(theta * depth)``, each trial contributes
    ``max_Q log(#level-depth cubes inside Q) / ((depth - s) log n)`` over
    level-``s`` cubes ``Q``.  The spread is the bootstrap standard error of
    the mean.
    """
    theta = _check_theta(theta)
    if trials < 1:
        raise DomainError("trials must be at least 1")
    s = math.floor(theta * depth)
    if s < 2 or depth - s < 1:
        raise InsufficientDataError(f"depth {depth} leaves no room at theta={theta}")
    values = []
    for trial in range(trials):
        smp = sample(params, depth, trial_seed(seed, trial))
        if not smp.survived:
            continue
        values.append(math.log(_max_descendants(smp, s, depth)) / ((depth - s) * math.log(params.n)))
    survival = len(values) / trials
    if not values:
        raise ExtinctionError(f"all {trials} trials died out before level {depth}", survival_fraction=0.0)
    values = np.asarray(values)
    rng = np.random.default_rng(seed)
    boots = rng.choice(values, size=(bootstrap, values.size), replace=True).mean(axis=1)
    return MCEstimate(
        value=float(values.mean()),
        spread=float(boots.std()),
        survival_fraction=survival,
        per_trial=values,
        box_dimension=box_dimension(params),
    )
