"""Brute-force verifiers that share as little code as possible with the fast paths.

* :func:`enumeration_pvalue` recomputes p-values from ``scipy.stats`` pmfs by
  listing every outcome.
* :func:`exact_coverage` sums the probabilities of all outcomes whose p-value
  exceeds ``alpha`` (set membership, no interval endpoints).
* :func:`nestedness_scan` looks for levels where neither bound moves.
* :func:`minimality_probe` perturbs fiducial bounds and checks the one-sided
  tail-coverage condition they must satisfy to stay exact.
* :func:`detect_jumps` finds discontinuities by repeated cell refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .distributions import DomainError, Family, pmf
from .intervals import bounds_curve, fiducial_interval
from .pvalues import TestKind, pvalues_all_outcomes, pvalues_on_grid

__all__ = [
    "CoverageProfile",
    "ProbeResult",
    "enumeration_pvalue",
    "enumeration_check",
    "exact_coverage",
    "nestedness_scan",
    "minimality_probe",
    "detect_jumps",
    "interior_grid",
]

TIE_RTOL = 1e-12
ENUMERATION_GRID = np.linspace(0.0123, 0.9877, 50)


def interior_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """``count`` midpoints of equal cells of ``[lo, hi]`` (never touches the ends)."""
    return lo + (hi - lo) * (np.arange(count) + 0.5) / count


# -------------------------------------------------------------- enumeration
def _frozen(family: Family, theta: float):
    if family.name == "binomial":
        return stats.binom(family.size, theta), 0
    if family.name == "poisson":
        return stats.poisson(theta), 0
    # scipy counts failures; trials = failures + k
    return stats.nbinom(family.size, theta), family.size


def _support(family: Family, theta: float, x: int) -> np.ndarray:
    dist, shift = _frozen(family, theta)
    last = family.size if family.finite_support else max(x, int(dist.mean() + 40 * dist.std()) + shift + 40)
    return np.arange(family.support[0], last + 1)


def _statistic(kind: TestKind, family: Family, theta: float, ks: np.ndarray) -> np.ndarray:
    dist, shift = _frozen(family, theta)
    p = dist.pmf(ks - shift)
    if kind is TestKind.STERNE:
        return 1.0 / p
    if kind is TestKind.BLAKER:
        lower = dist.cdf(ks - shift)
        upper = dist.sf(ks - shift - 1)
        return 1.0 / np.minimum(lower, upper)
    if kind is TestKind.LR:
        return _sup_likelihood(family, ks) / p
    # score test, written out per family
    t = theta
    if family.name == "binomial":
        n = family.size
        return (ks / t - (n - ks) / (1 - t)) ** 2 / (n / (t * (1 - t)))
    if family.name == "poisson":
        return (ks - t) ** 2 / t
    k = family.size
    return (k / t - (ks - k) / (1 - t)) ** 2 / (k / (t * t * (1 - t)))


def _sup_likelihood(family: Family, ks: np.ndarray) -> np.ndarray:
    """Probability of each outcome under its own maximum likelihood estimate."""
    if family.name == "binomial":
        return stats.binom.pmf(ks, family.size, ks / family.size)
    if family.name == "poisson":
        # the estimate 0 puts all mass on 0
        return np.where(ks == 0, 1.0, stats.poisson.pmf(ks, np.maximum(ks, 1)))
    k = family.size
    return stats.nbinom.pmf(ks - k, k, k / ks)


def enumeration_pvalue(kind, family: Family, theta: float, x: int) -> float:
    """P-value by listing the outcomes and summing their ``scipy.stats`` probabilities.

    Statistics within a relative ``TIE_RTOL`` of the observed one count as ties
    (and are accepted).
    """
    kind = TestKind.parse(kind)
    ks = _support(family, theta, x)
    dist, shift = _frozen(family, theta)
    p = dist.pmf(ks - shift)
    if kind is TestKind.FIDUCIAL:
        lower = p[ks <= x].sum()
        upper = p[ks >= x].sum() + dist.sf(ks[-1] - shift)
        return float(min(2 * lower, 2 * upper, 1.0))
    t = _statistic(kind, family, theta, ks)
    tx = t[ks == x][0]
    accepted = t >= tx * (1 - TIE_RTOL)
    # the omitted far tail has extreme statistics and is accepted
    return float(min(p[accepted].sum() + dist.sf(ks[-1] - shift), 1.0))


def enumeration_check(family: Family, *, kinds=tuple(TestKind), thetas=None, tol: float = 1e-12):
    """Largest disagreement between the cut-based and enumerated p-values.

    Returns ``(max_abs_diff, worst)`` where ``worst`` is ``(kind, theta, x)``.
    At a breakpoint two statistics tie exactly and the p-value follows the
    liminf convention, which enumeration does not model; the default grid is
    offset from the simple rationals where small-``n`` ties sit.
    """
    from .pvalues import pvalue

    if thetas is None:
        thetas = ENUMERATION_GRID
    last = family.size if family.finite_support else 30
    worst, where = 0.0, None
    for kind in kinds:
        for theta in thetas:
            for x in range(family.support[0], last + 1):
                d = abs(pvalue(kind, family, float(theta), x, liminf=False) - enumeration_pvalue(kind, family, float(theta), x))
                if d > worst:
                    worst, where = d, (TestKind.parse(kind), float(theta), x)
    return worst, where


# ----------------------------------------------------------------- coverage
@dataclass(frozen=True)
class CoverageProfile:
    """Coverage ``C(theta) = sum of P(X = x) over x with lambda(theta, x) > alpha``."""

    kind: TestKind
    family: Family
    alpha: float
    theta_grid: np.ndarray
    coverage: np.ndarray

    @property
    def min_coverage(self) -> float:
        return float(self.coverage.min())

    @property
    def argmin(self) -> float:
        return float(self.theta_grid[int(np.argmin(self.coverage))])

    @property
    def exact(self) -> bool:
        return self.min_coverage >= 1.0 - self.alpha


def exact_coverage(kind, family: Family, alpha, theta_grid, *, tail: float = 1e-13):
    """Coverage profile(s) on ``theta_grid`` by direct membership ``lambda > alpha``.

    ``alpha`` may be a scalar or a sequence; a sequence returns one profile
    per level (the p-values are computed once).  For infinite supports
    outcomes stop once the omitted mass is below ``tail``; that mass is
    counted as not covered.
    """
    kind = TestKind.parse(kind)
    grid = np.asarray(theta_grid, dtype=float)
    if grid.size == 0:
        raise DomainError("theta grid is empty")
    family.check(grid)
    alphas = np.atleast_1d(np.asarray(alpha, dtype=float))
    cover = np.zeros((alphas.size, grid.size))
    for j, theta in enumerate(grid):
        _, probs, pvals = pvalues_all_outcomes(kind, family, float(theta), tail=tail)
        cover[:, j] = [(probs * (pvals > a)).sum() for a in alphas]
    profiles = [CoverageProfile(kind, family, float(a), grid, cover[i]) for i, a in enumerate(alphas)]
    return profiles[0] if np.ndim(alpha) == 0 else profiles


# --------------------------------------------------------------- nestedness
def nestedness_scan(kind, family: Family, x: int, alpha_grid, *, tol: float = 1e-9) -> list[tuple[float, float]]:
    """Maximal alpha windows over which neither interval bound moves by more than ``tol``."""
    alphas = np.asarray(alpha_grid, dtype=float)
    if alphas.size < 2:
        raise DomainError("alpha grid needs at least two points")
    bc = bounds_curve(kind, family, x, alphas, tol=tol)
    both = bc.lower_flat & bc.upper_flat
    windows = []
    i = 0
    while i < both.size:
        if both[i]:
            j = i
            while j + 1 < both.size and both[j + 1]:
                j += 1
            windows.append((float(alphas[i]), float(alphas[j + 1])))
            i = j + 1
        else:
            i += 1
    return windows


# --------------------------------------------------------------- minimality
@dataclass(frozen=True)
class ProbeResult:
    """Outcome of perturbing one fiducial bound.

    ``inward_violates``: shrinking the bound by ``delta`` makes the one-sided
    coverage drop below ``1 - alpha/2`` at some grid point.
    ``outward_preserves``: widening it by ``delta`` keeps the coverage above.
    """

    x: int
    side: str
    inward_violates: bool
    outward_preserves: bool
    inward_min_coverage: float
    outward_min_coverage: float

    @property
    def passed(self) -> bool:
        return self.inward_violates and self.outward_preserves


def _one_sided_coverage(family: Family, grid, bounds, side: str) -> np.ndarray:
    ks = np.arange(family.support[0], family.size + 1)
    probs = pmf(family, grid[:, None], ks[None, :], check=False)
    if side == "lower":
        hit = bounds[None, :] <= grid[:, None]
    else:
        hit = bounds[None, :] >= grid[:, None]
    return (probs * hit).sum(axis=1)


def minimality_probe(family: Family, alpha: float, x_set=None, delta: float = 1e-3, *, grid_size: int = 2001):
    """Perturb each fiducial bound in turn and test one-sided exactness.

    Returns ``(results, monotone)``; ``monotone`` states that both bound
    sequences are monotone in ``x``.  Only finite supports are probed.
    """
    if not family.finite_support:
        raise DomainError("minimality_probe needs a finite support")
    if not delta > 0:
        raise DomainError("delta must be positive")
    ks = np.arange(family.support[0], family.size + 1)
    xs = ks if x_set is None else np.array(sorted(int(v) for v in x_set))
    ivs = [fiducial_interval(family, int(k), alpha) for k in ks]
    lower = np.array([iv.lower for iv in ivs])
    upper = np.array([iv.upper for iv in ivs])
    lo_edge, hi_edge = family.theta_space
    grid = interior_grid(lo_edge, hi_edge, grid_size)
    level = 1.0 - alpha / 2.0
    monotone = bool(np.all(family.orientation * np.diff(lower) >= 0) and np.all(family.orientation * np.diff(upper) >= 0))
    results = []
    for x in xs:
        i = int(x) - int(ks[0])
        for side, bounds, sign in (("lower", lower, 1.0), ("upper", upper, -1.0)):
            inward = bounds.copy()
            inward[i] = bounds[i] + sign * delta
            outward = bounds.copy()
            outward[i] = min(max(bounds[i] - sign * delta, lo_edge), hi_edge)
            c_in = _one_sided_coverage(family, grid, inward, side)
            c_out = _one_sided_coverage(family, grid, outward, side)
            results.append(
                ProbeResult(
                    int(x),
                    side,
                    bool(np.any(c_in < level)),
                    bool(np.all(c_out >= level)),
                    float(c_in.min()),
                    float(c_out.min()),
                )
            )
    return results, monotone


# -------------------------------------------------------------------- jumps
def detect_jumps(kind, family: Family, x: int, grid, *, threshold: float = 1e-9, rounds: int = 40):
    """Discontinuities of ``theta -> lambda(theta, x)`` between grid points.

    Each cell is halved ``rounds`` times, keeping the half with the larger
    change.  A continuous function leaves a change of order ``width * 2**-rounds``;
    a jump leaves its full size.  Returns ``(theta_lo, theta_hi, left, right)``
    for every cell whose final change exceeds ``threshold``.
    """
    grid = np.asarray(grid, dtype=float)
    lo, hi = grid[:-1].copy(), grid[1:].copy()
    v_lo = pvalues_on_grid(kind, family, x, lo)
    v_hi = pvalues_on_grid(kind, family, x, hi)
    keep = np.abs(v_hi - v_lo) > threshold
    lo, hi, v_lo, v_hi = lo[keep], hi[keep], v_lo[keep], v_hi[keep]
    for _ in range(rounds):
        if lo.size == 0:
            break
        mid = lo + (hi - lo) / 2
        v_mid = pvalues_on_grid(kind, family, x, mid)
        left = np.abs(v_mid - v_lo) >= np.abs(v_hi - v_mid)
        hi, v_hi = np.where(left, mid, hi), np.where(left, v_mid, v_hi)
        lo, v_lo = np.where(left, lo, mid), np.where(left, v_lo, v_mid)
        keep = np.abs(v_hi - v_lo) > threshold
        lo, hi, v_lo, v_hi = lo[keep], hi[keep], v_lo[keep], v_hi[keep]
    return [(float(a), float(b), float(c), float(d)) for a, b, c, d in zip(lo, hi, v_lo, v_hi) if math.isfinite(c)]
