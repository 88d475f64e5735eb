"""Confidence intervals from inverted p-values and their exact coverage.

Run with ``python notebooks/02_intervals_and_coverage.py``.
"""

from exactinf import binomial, exact_coverage, interval, negbinomial
from exactinf.oracle import interior_grid

# negative binomial, 90% Blaker intervals after 38 or 40 trials
for k, x in ((19, 38), (20, 40)):
    iv = interval("blaker", negbinomial(k), x, 0.1)
    print(f"NB({k}) x={x}: ({iv.lower:.5f}, {iv.upper:.5f}) width {iv.width:.4f}")

# Blaker sits inside Clopper-Pearson for every outcome
fam = binomial(20)
print(" x   Clopper-Pearson        Blaker")
for x in range(0, 21, 4):
    cp, bl = interval("fiducial", fam, x, 0.05), interval("blaker", fam, x, 0.05)
    print(f"{x:2d}  ({cp.lower:.4f}, {cp.upper:.4f})  ({bl.lower:.4f}, {bl.upper:.4f})")

# exact coverage never drops below the nominal level
grid = interior_grid(0.0, 1.0, 2001)
for kind in ("fiducial", "sterne", "blaker", "lr", "score"):
    prof = exact_coverage(kind, fam, 0.05, grid)
    print(f"{kind:8s} min coverage {prof.min_coverage:.4f} at theta {prof.argmin:.4f}")
