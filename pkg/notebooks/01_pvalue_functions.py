"""P-value functions of a fixed outcome: jumps, plateau and bimonotonicity.

Run with ``python notebooks/01_pvalue_functions.py``.
"""

import numpy as np

from exactinf import bimonotonicity_check, poisson, pvalue, pvalue_curve
from exactinf.oracle import interior_grid

fam, x = poisson(), 9
grid = interior_grid(0.0, 25.0, 2000)

for kind in ("fiducial", "sterne", "blaker", "lr", "score"):
    curve = pvalue_curve(kind, fam, x, grid)
    lo, hi = curve.plateau
    print(f"{kind:8s} jumps={len(curve.jumps):3d}  plateau=[{lo:.4f}, {hi:.4f}]")

# a Sterne jump: the p-value changes by about 0.035 across 1e-6
for t in (4.954163, 4.954164):
    print(f"sterne lambda({t}, 9) = {pvalue('sterne', fam, t, 9):.4f}")

# first stretch where a strict p-value runs the wrong way, Poisson x = 2
for kind in ("sterne", "blaker", "lr", "score"):
    first = min(bimonotonicity_check(kind, fam, 2), key=lambda v: v.theta0)
    print(f"{kind:8s} first violation at theta_r = {first.theta_r:.6f} (side {first.side})")

print("sqrt(12) =", np.sqrt(12.0))
