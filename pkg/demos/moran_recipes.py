"""Homogeneous Moran sets built from a dyadic recipe.

A recipe fixes the box dimension t and the phase-transition point 1/lambda.
The truncated spectrum from the contraction sequence is compared with the
closed form, and inverting the sequence turns the Assouad spectrum into a
lower spectrum.
"""
from assouad_spectra import moran

t, lam, K = 0.5, 2.0, 4000
print(f"recipe t={t}, lambda={lam}: transition at theta = {moran.recipe_transition(lam):.3f}")
print("theta   truncated  closed form")
for theta in (0.2, 0.4, 0.5, 0.7):
    seq = moran.recipe_sequence(t, lam, 8, int(K / theta) + 2)
    # the trailing window covers one factor of the schedule ratio 8
    est = moran.assouad_spectrum_trunc(moran.dyadic_spec(seq), theta, K, tail_fraction=1 - 1 / 8)
    print(f"{theta:5.2f}   {est.sup_tail:.4f}     {moran.recipe_spectrum(t, lam, theta):.4f}")

curve = moran.recipe_curve(t, lam)
lower = moran.inverted_lower_curve(curve)
print(f"\ninverted sequence: lower spectrum runs from {lower.values[0]:.3f} to {lower.values[-1]:.3f}")
