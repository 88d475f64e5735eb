"""Nestedness of interval families across levels.

Run with ``python notebooks/03_nestedness.py``.
"""

import numpy as np

from exactinf import binomial, bounds_curve, nestedness_thresholds

# bounds as functions of alpha: fiducial moves strictly, Blaker has flat stretches
alphas = np.linspace(0.005, 0.3, 300)
for kind in ("fiducial", "blaker"):
    bc = bounds_curve(kind, binomial(20), 4, alphas)
    both = bc.lower_flat & bc.upper_flat
    print(f"{kind:8s} strictly nested: {bc.strictly_nested}  levels with both bounds flat: {both.sum()}")

# smallest level at which both Blaker bounds stay put, by n
for n in (5, 6, 7, 10, 20, 50):
    rep = nestedness_thresholds("blaker", binomial(n))
    print(f"n={n:3d}  alpha_nest={rep.alpha_nest:.3e}  0.5**n={0.5 ** n:.3e}")
