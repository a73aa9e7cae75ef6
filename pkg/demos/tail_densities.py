"""Tail densities of sets of integers.

The tail density at lambda counts members in [k, lambda k].  For periodic
sets every density equals the fraction of residues kept.  A set made of
sparse blocks separates the asymptotic, tail and Banach densities.
"""
import numpy as np

from assouad_spectra.tail_density import (
    IntegerSet,
    asymptotic_densities,
    banach_densities,
    check_taildensity_props,
    exact_limits,
    tail_densities,
)

X = IntegerSet.periodic(7, [1, 2, 4])
print("periodic set, residues {1, 2, 4} mod 7:", {k: str(v) for k, v in exact_limits(X).items()})

blocks = IntegerSet.blocks([(4 ** j, 2 * 4 ** j) for j in range(1, 9)], horizon=2 * 4 ** 8)
K = 4 ** 7
up, lo = asymptotic_densities(blocks, K, tail_fraction=0.8)
print(f"\nblocks [4^j, 2 4^j]: asymptotic upper {up.sup_tail:.3f}, lower {lo.inf_tail:.3f}")
print(f"Banach upper and lower {banach_densities(blocks, 2 * K, min_window=K // 10)}")
for lam in (1.5, 2.0, 4.0):
    up_t, lo_t = tail_densities(blocks, lam, K, tail_fraction=0.8)
    print(f"  lambda {lam}: tail upper {up_t.sup_tail:.3f}, lower {lo_t.inf_tail:.3f}")

report = check_taildensity_props(blocks, np.round(np.arange(1.5, 3.01, 0.05), 2), K, windows=5000, tail_fraction=0.8)
print(f"\ninequalities and complement identity hold: {report.ok}")
