import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from assouad_spectra.errors import DomainError, InsufficientDataError, PreconditionError, ValidationError
from assouad_spectra.moran import sharpness_sequence
from assouad_spectra.tail_density import (
    IntegerSet,
    asymptotic_densities,
    banach_densities,
    check_taildensity_props,
    exact_limits,
    tail_densities,
    tail_values,
    window_count,
)


def brute_banach(members, K, min_window):
    best_hi, best_lo = 0.0, 1.0
    for lo in range(1, K + 1):
        for hi in range(lo + min_window - 1, K + 1):
            frac = sum(1 for x in members if lo <= x <= hi) / (hi - lo + 1)
            best_hi, best_lo = max(best_hi, frac), min(best_lo, frac)
    return best_hi, best_lo


def test_naturals_tail():
    up, lo = tail_densities(IntegerSet.naturals(), 2.0, 1000)
    assert up.exact == 1 and lo.exact == 1
    # k..2k holds k + 1 integers against a denominator of k
    assert np.allclose(up.partials, (up.ks + 1) / up.ks)


def test_multiples_of_three_tail():
    for lam in (1.5, 2.0, 3.7):
        up, lo = tail_densities(IntegerSet.multiples(3), lam, 5000)
        assert up.exact == Fraction(1, 3)
        assert up.sup_tail == pytest.approx(1 / 3, abs=2 / 4000)
        assert lo.inf_tail == pytest.approx(1 / 3, abs=2 / 4000)


def test_sharpness_set_tail_half():
    seq = sharpness_sequence(20_000)
    twos = seq.twos()
    vals = tail_values(twos, 2.0, 5000)
    # k between the runs at 1024 and 4096: windows [k, 2k] avoid both
    assert np.all(np.abs(vals[1100:2000] - 0.5) < 0.01)


def test_tail_domain_and_horizon():
    with pytest.raises(DomainError):
        tail_values(IntegerSet.naturals(), 1.0, 10)
    with pytest.raises(InsufficientDataError):
        tail_values(IntegerSet.explicit([1, 5, 9], horizon=20), 2.0, 15)


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(1, 120), max_size=60), st.sampled_from([1.3, 2.0, 2.5]))
def test_tail_values_match_brute(members, lam):
    X = IntegerSet.explicit(members, horizon=300)
    vals = tail_values(X, lam, 100)
    for k in (1, 7, 50, 100):
        count = sum(1 for x in members if k <= x <= math.floor(lam * k))
        assert vals[k - 1] == pytest.approx(count / (lam * k - k))


def test_asymptotic_examples():
    up, lo = asymptotic_densities(IntegerSet.multiples(2), 1000)
    assert up.sup_tail == pytest.approx(0.5, abs=1e-3) and lo.inf_tail == pytest.approx(0.5, abs=1e-3)
    up, lo = asymptotic_densities(IntegerSet.empty(), 100)
    assert up.sup_tail == 0 and lo.inf_tail == 0


def test_asymptotic_runs_truncated():
    # members in [4**j, 2 * 4**j]: prefix density oscillates and never reaches 1 at finite K
    blocks = IntegerSet.blocks([(4 ** j, 2 * 4 ** j) for j in range(1, 8)], horizon=40_000)
    up, lo = asymptotic_densities(blocks, 40_000, tail_fraction=0.9)
    assert 0.5 < up.sup_tail < 0.7 and lo.inf_tail < 0.4


def test_banach_examples():
    # windows of length 3 such as [2, 4] hold two evens
    assert banach_densities(IntegerSet.multiples(2), 200, min_window=2) == (pytest.approx(2 / 3), pytest.approx(1 / 3))
    assert banach_densities(IntegerSet.multiples(2), 200, min_window=1) == (1.0, 0.0)
    run = IntegerSet.blocks([(50, 59)], horizon=200)
    assert banach_densities(run, 200, min_window=10)[0] == 1.0
    assert banach_densities(IntegerSet.empty(), 50) == (0.0, 0.0)
    with pytest.raises(DomainError):
        banach_densities(IntegerSet.empty(), 50, min_window=0)
    with pytest.raises(InsufficientDataError):
        banach_densities(IntegerSet.empty(), 5, min_window=10)


@settings(max_examples=40, deadline=None)
@given(st.sets(st.integers(1, 40), max_size=25), st.integers(1, 8))
def test_banach_matches_brute(members, min_window):
    X = IntegerSet.explicit(members, horizon=40)
    got = banach_densities(X, 40, min_window)
    want = brute_banach(members, 40, min_window)
    assert got == (pytest.approx(want[0]), pytest.approx(want[1]))


@settings(max_examples=40, deadline=None)
@given(st.sets(st.integers(1, 200), max_size=80), st.sets(st.integers(1, 200), max_size=80))
def test_inclusion_monotone(a, b):
    small = IntegerSet.explicit(a, horizon=400)
    big = IntegerSet.explicit(a | b, horizon=400)
    assert np.all(tail_values(small, 2.0, 200) <= tail_values(big, 2.0, 200))
    assert np.all(asymptotic_densities(small, 200)[0].partials <= asymptotic_densities(big, 200)[0].partials)


@pytest.mark.parametrize("q, residues", [(2, [0]), (3, [0]), (5, [0]), (7, [1, 2, 4]), (4, [0, 1, 2, 3])])
def test_exact_limits_periodic(q, residues):
    X = IntegerSet.periodic(q, residues)
    lim = exact_limits(X)
    assert set(lim.values()) == {Fraction(len(residues), q)}
    up, lo = asymptotic_densities(X, 3000)
    # a partial period of j terms is off by at most r(q - r)/q members
    r = len(residues)
    assert np.all(np.abs(up.partials - lim["upper_asymptotic"]) <= r * (q - r) / q / up.ks + 1e-12)


def test_exact_limits_need_period():
    with pytest.raises(PreconditionError):
        exact_limits(IntegerSet.explicit([1, 2, 3]))


@pytest.mark.parametrize("q", [2, 3, 5])
def test_props_multiples(q):
    report = check_taildensity_props(IntegerSet.multiples(q), [1.1, 1.5, 2, 4, 10], K=5000, windows=20_000)
    assert report.ok, report.violations
    assert report.windows_checked == 20_000


def test_props_naturals_tight_lower_bound():
    lam = 2.0
    assert (lam * 1 - 1) / (lam - 1) == 1
    assert check_taildensity_props(IntegerSet.naturals(), [lam], K=1000, windows=1000).ok


def test_props_truncated_blocks():
    blocks = IntegerSet.blocks([(4 ** j, 2 * 4 ** j) for j in range(1, 9)], horizon=2 * 4 ** 8)
    # the trailing window spans one factor of 4, a full period of the block schedule
    lams = np.round(np.arange(1.5, 3.01, 0.05), 2)
    report = check_taildensity_props(blocks, lams, K=4 ** 7, windows=5000, tail_fraction=0.8)
    assert report.ok, report.violations


def test_props_report_violations():
    # a wrong slack sign turns the truncated check into a strict one that the block set fails
    blocks = IntegerSet.blocks([(4 ** j, 2 * 4 ** j) for j in range(1, 9)], horizon=2 * 4 ** 8)
    report = check_taildensity_props(blocks, [1.5, 2.0], K=4 ** 7, windows=100, slack=-0.5)
    assert not report.ok


def test_complement_identity():
    X = IntegerSet.explicit([2, 3, 5, 7, 11, 13], horizon=30)
    Y = X.complement()
    for lo in range(1, 31):
        for hi in range(lo, 31):
            assert window_count(X, lo, hi) + window_count(Y, lo, hi) == hi - lo + 1
    per = IntegerSet.periodic(6, [1, 5]).complement()
    assert per.exact_density == Fraction(2, 3)


@pytest.mark.parametrize(
    "payload",
    [{}, {"explicit": [1], "periodic": {"q": 2, "residues": [0]}}, {"periodic": {"q": 0, "residues": []}}, {"explicit": [0, 3]}, {"blocks": {"intervals": [[5, 2]], "horizon": 9}}],
)
def test_from_dict_validation(payload):
    with pytest.raises(ValidationError):
        IntegerSet.from_dict(payload)


def test_dict_round_trip():
    for X in (IntegerSet.explicit([1, 4], horizon=9), IntegerSet.periodic(4, [1, 3]), IntegerSet.blocks([(2, 5)], 10)):
        assert IntegerSet.from_dict(X.to_dict()) == X
