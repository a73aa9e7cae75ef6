import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import Polynomial
from scipy import stats

from assouad_spectra import percolation as pc
from assouad_spectra.errors import DomainError, ExtinctionError, InsufficientDataError, ResourceError, ValidationError

P2 = pc.PercolationParams(n=2, d=2, p=0.7)
BIN = pc.binomial_pmf(2, Fraction(4, 5))


def pgf_moments(pmf, depth, K):
    """Raw moments of Y_depth from the composed generating function (float oracle)."""
    G = Polynomial([float(q) for q in pmf])
    law = Polynomial([0.0, 1.0])
    for _ in range(depth):
        law = law(G)
    y = np.arange(law.coef.size, dtype=float)
    return [float(np.sum(law.coef * y ** k)) for k in range(1, K + 1)]


def test_box_dimension():
    assert pc.box_dimension(P2) == pytest.approx(math.log(2.8) / math.log(2), abs=1e-12)
    assert pc.box_dimension(P2) == pytest.approx(1.4854, abs=1e-4)
    assert pc.box_dimension(pc.PercolationParams(3, 1, 1.0)) == pytest.approx(1.0)
    assert pc.box_dimension(pc.PercolationParams(3, 1, 0.5)) == pytest.approx(0.3691, abs=1e-4)
    with pytest.raises(DomainError):
        pc.box_dimension(pc.PercolationParams(2, 1, 0.5))


@pytest.mark.parametrize("args", [(1, 2, 0.5), (2, 0, 0.5), (2, 2, 0.0), (2, 2, 1.5)])
def test_params_validation(args):
    with pytest.raises(ValidationError):
        pc.PercolationParams(*args)


def test_binomial_moments():
    mom = pc.binomial_moments(2, 0.8, 3)
    assert mom[1] == Fraction(8, 5) and mom[2] == Fraction(72, 25)
    assert list(pc.binomial_moments(3, 1, 4).raw) == [3, 9, 27, 81]
    assert list(pc.binomial_moments(1, Fraction(1, 3), 4).raw) == [Fraction(1, 3)] * 4
    with pytest.raises(ResourceError):
        pc.binomial_moments(100, 0.5, 2, cap=20)


def test_expand_power_sum_small():
    mom = pc.binomial_moments(2, 0.8, 3)
    assert pc.expand_power_sum(mom, 1) == [0, mom[1]]
    assert pc.expand_power_sum(mom, 2) == [0, mom[2] - mom[1] ** 2, mom[1] ** 2]


@given(st.integers(1, 6), st.integers(2, 5))
def test_expand_power_sum_deterministic(k, c):
    mom = pc.OffspringMoments(tuple(c ** j for j in range(1, k + 1)))
    b = pc.expand_power_sum(mom, k)
    assert b[k] == c ** k
    assert all(v == 0 for v in b[:k])


def test_expand_power_sum_direct():
    # E[(X_1 + ... + X_y)**3] for y = 0..4 by exhaustive convolution of the offspring law
    mom = pc.OffspringMoments.from_pmf(BIN, 3)
    b = pc.expand_power_sum(mom, 3)
    for y in range(5):
        law = [Fraction(1)]
        for _ in range(y):
            law = np.convolve(np.array(law, dtype=object), np.array(BIN, dtype=object)).tolist()
        direct = sum(q * z ** 3 for z, q in enumerate(law))
        assert sum(b[i] * y ** i for i in range(4)) == direct


def test_expand_power_sum_caps():
    mom = pc.binomial_moments(2, 0.8, 3)
    with pytest.raises(InsufficientDataError):
        pc.expand_power_sum(mom, 4)
    with pytest.raises(ResourceError):
        pc.expand_power_sum(pc.binomial_moments(2, 0.8, 13), 13)


def test_table_spot_values():
    table = pc.gw_moment_table(pc.OffspringMoments.from_pmf(BIN, 5), 5)
    assert table.a(1, 1) == 1
    assert table.moment(2, 2) == Fraction(4928, 625)  # 7.8848
    for k in range(1, 6):
        assert table.row_sum(k) == 1
    assert table.moment(1, 7) == Fraction(8, 5) ** 7


def test_table_deterministic():
    table = pc.gw_moment_table(pc.OffspringMoments((3, 9, 27, 81)), 4)
    for k in range(1, 5):
        assert table.a(k, k) == 1
        assert all(table.a(k, i) == 0 for i in range(1, k))


@pytest.mark.parametrize(
    "pmf",
    [BIN, [Fraction(1, 10), Fraction(2, 10), Fraction(3, 10), Fraction(4, 10)], [0, Fraction(1, 2), 0, Fraction(1, 2)], pc.binomial_pmf(4, 0.7)],
)
def test_table_matches_pgf_oracle(pmf):
    table = pc.gw_moment_table(pc.OffspringMoments.from_pmf(pmf, 5), 5)
    for depth in range(5):
        oracle = pgf_moments(pmf, depth, 5)
        for k in range(1, 6):
            assert float(table.moment(k, depth)) == pytest.approx(oracle[k - 1], rel=1e-9)


def test_table_matches_exact_distribution():
    pmf = [Fraction(1, 10), Fraction(2, 10), Fraction(3, 10), Fraction(4, 10)]
    table = pc.gw_moment_table(pc.OffspringMoments.from_pmf(pmf, 5), 5)
    for depth in range(4):
        law = pc.exact_gw_distribution(pmf, depth)
        for k in range(1, 6):
            assert pc.pmf_moment(law, k) == table.moment(k, depth)


def test_table_monotone():
    table = pc.gw_moment_table(pc.OffspringMoments.from_pmf(BIN, 5), 5)
    vals = np.array([[float(table.moment(k, n)) for n in range(6)] for k in range(1, 6)])
    assert np.all(np.diff(vals, axis=0) >= 0) and np.all(np.diff(vals, axis=1) >= 0)


def test_table_subcritical():
    with pytest.raises(DomainError):
        pc.gw_moment_table(pc.binomial_moments(2, 0.4, 3), 3)


def test_exact_distribution_examples():
    p = Fraction(1, 3)
    law = pc.exact_gw_distribution([1 - p, p], 2)
    assert law[1] == p ** 2 and law[0] == 1 - p ** 2
    law = pc.exact_gw_distribution(BIN, 2)
    assert len(law) == 5 and sum(law) == 1
    assert pc.pmf_moment(law, 1) == Fraction(64, 25)
    assert pc.pmf_moment(law, 2) == Fraction(4928, 625)  # 7.8848
    law = pc.exact_gw_distribution([0, 0, 1], 3)
    assert law[8] == 1 and sum(law) == 1
    with pytest.raises(ResourceError):
        pc.exact_gw_distribution(BIN, 7)


# -- sampling ---------------------------------------------------------------------------

def test_sample_deterministic():
    a, b = pc.sample(P2, 6, seed=11), pc.sample(P2, 6, seed=11)
    assert all(np.array_equal(x, y) for x, y in zip(a.levels, b.levels))
    assert a.counts() != pc.sample(P2, 6, seed=12).counts()


def test_sample_tree_consistency():
    smp = pc.sample(P2, 7, seed=3)
    for k in range(1, 8):
        parents = {tuple(c) for c in smp.levels[k - 1]}
        assert all(tuple(c // 2) in parents for c in smp.levels[k])


def test_sample_subtree_independent_of_depth():
    shallow, deep = pc.sample(P2, 4, seed=9), pc.sample(P2, 8, seed=9)
    for x, y in zip(shallow.levels, deep.levels):
        assert np.array_equal(x, y)


def test_sample_near_full():
    smp = pc.sample(pc.PercolationParams(2, 2, 0.999999), 3, seed=1)
    assert smp.counts()[3] >= 0.99 * 2 ** 6


def test_sample_level_one_is_binomial():
    params = pc.PercolationParams(2, 2, 0.6)
    counts = np.array([pc.sample(params, 1, pc.trial_seed(7, t)).counts()[1] for t in range(10_000)])
    observed = np.bincount(counts, minlength=5)
    expected = 10_000 * np.array([float(q) for q in pc.binomial_pmf(4, 0.6)])
    assert stats.chisquare(observed, expected).pvalue > 0.001


def test_cube_uniforms_order_free():
    coords = np.array([[0, 1], [3, 2], [5, 5]])
    u = pc.cube_uniforms(42, 3, coords)
    assert np.all((u >= 0) & (u < 1))
    assert np.array_equal(pc.cube_uniforms(42, 3, coords[::-1]), u[::-1])


# -- bounds and Monte-Carlo ------------------------------------------------------------------

def test_g_cube_bound_first_moment():
    table = pc.gw_moment_table(pc.binomial_moments(4, 0.7, 3), 3)
    bound = pc.g_cube_bound(P2, 4, 4.5, 40.0, 1, table)
    assert bound == pytest.approx(2.8 ** 4 * 2.8 ** 4 / 40.0)
    assert pc.g_cube_bound(P2, 4, 4, 1e12, 2, table) < 1e-12
    with pytest.raises(DomainError):
        pc.g_cube_bound(P2, 4, 4, 40.0, 4, table)


def test_g_cube_bound_dominates_frequency():
    table = pc.gw_moment_table(pc.binomial_moments(4, 0.7, 3), 3)
    bound = pc.g_cube_bound(P2, 4, 4, 40, 2, table)
    freq = pc.g_cube_frequency(P2, 4, 4, 40, trials=2000, seed=2)
    assert freq <= bound


def test_borel_cantelli_sign_flip():
    B, N, theta = 1.4854, 10, 0.5
    B1 = pc.implied_spectrum_bound(B, N, theta)
    assert B1 == pytest.approx(1.4854 * 1.1)
    assert pc.borel_cantelli_exponent(B, B1, N, theta) == pytest.approx(0, abs=1e-12)
    assert pc.borel_cantelli_exponent(B, B1 + 0.01, N, theta) < 0
    assert pc.borel_cantelli_exponent(B, B1 - 0.01, N, theta) > 0
    assert pc.implied_spectrum_bound(B, 10 ** 9, theta) == pytest.approx(B, abs=1e-8)


def test_mc_full_cube():
    est = pc.empirical_spectrum_mc(pc.PercolationParams(2, 2, 1.0), 0.5, depth=8, trials=3, seed=0, bootstrap=50)
    assert est.value == pytest.approx(2.0) and est.survival_fraction == 1.0


def test_mc_line():
    params = pc.PercolationParams(2, 1, 0.9)
    est = pc.empirical_spectrum_mc(params, 0.5, depth=14, trials=200, seed=1)
    assert est.value == pytest.approx(math.log(1.8) / math.log(2), abs=0.15)


def test_mc_errors():
    with pytest.raises(InsufficientDataError):
        pc.empirical_spectrum_mc(P2, 0.1, depth=5, trials=2, seed=0)
    with pytest.raises(ExtinctionError) as info:
        pc.empirical_spectrum_mc(pc.PercolationParams(2, 1, 0.05), 0.5, depth=8, trials=5, seed=0)
    assert info.value.survival_fraction == 0.0
