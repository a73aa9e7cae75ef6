"""Self-similar sets whose pieces overlap.

The first map of this system is listed twice, so the similarity exponent s
exceeds the true dimension.  We solve the pressure equation for s, estimate
the local mass exponent t at random points, and draw the resulting upper
bound for the Assouad spectrum.
"""
import numpy as np

from assouad_spectra import selfsimilar as ss
from assouad_spectra.spectrum_core import ThetaGrid

ifs = ss.SimilarIFS.from_maps([(0.5, 0.0), (0.5, 0.0), (0.25, 0.75)])
s = ss.similarity_exponent(ifs)
print(f"similarity exponent s = {s:.10f}, pressure there {ss.pressure(ifs, s):.1e}")

est = ss.estimate_t(ifs, s, np.geomspace(1e-2, 1e-5, 20), samples=16, seed=0)
print(f"heuristic t from ball masses: {est.value:.4f} (spread {est.slopes.min():.3f} to {est.slopes.max():.3f})")

params = ss.OverlapBoundParams(s=0.7, t=0.5, upper_box=0.6)
lo, hi = ss.improvement_region(params)
print(f"\nfor s=0.7, t=0.5 and box dimension 0.6 the bound improves on theta in ({lo:.3f}, {hi:.3f})")
curve = ss.overlap_bound_curve(params, ThetaGrid.uniform(9))
for theta, value in zip(curve.grid, curve.values):
    print(f"  theta {theta:.1f}: {value:.4f}   general bound {min(0.6 / (1 - theta), 1.0):.4f}")
