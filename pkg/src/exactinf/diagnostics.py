"""Structural diagnostics of strictly two-sided p-value functions.

Everything here reads off the piecewise structure of ``theta -> lambda(theta, x)``:
the breakpoints where outcomes enter or leave the acceptance set, the jumps
they cause, the levels at which interval bounds stop moving (nestedness
thresholds), smooth pieces that run the wrong way (non-bimonotonicity) and the
resulting holes in ``{theta : lambda(theta, x) > alpha}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._roots import tail_theta
from .distributions import DomainError, Family, sf
from .intervals import _bounds, _check_x, _structure
from .piecewise import PiecewisePValue, Segment, piecewise, stationary_point
from .pvalues import TestKind, _strict, pvalues_on_grid

SEGMENT_RTOL = 1e-10

__all__ = [
    "BreakpointReport",
    "PValueCurve",
    "NestednessRecord",
    "NestednessReport",
    "Violation",
    "breakpoints",
    "pvalue_curve",
    "level_gaps",
    "nestedness_thresholds",
    "bimonotonicity_check",
    "holes",
    "poisson_geometric_mean",
]


# ---------------------------------------------------------------- breakpoints
@dataclass(frozen=True)
class BreakpointReport:
    """Breakpoints of the acceptance cut for one observation.

    Attributes
    ----------
    thetas : ndarray
        Ascending parameter values where the cut changes (the jump locations).
    entry : dict
        ``y -> theta_{y,x}``: where ``y`` first joins the acceptance set,
        counted from the edge of the parameter space at which ``x`` lies in
        the upper tail (for ``y < x``) or the lower tail (for ``y > x``).
    crossings : dict
        ``y -> all parameter values`` where ``y`` enters or leaves.
    ordering_violations : list
        Pairs ``(y, y + 1)`` breaking the monotone order of ``entry``.
    """

    thetas: np.ndarray
    entry: dict[int, float]
    crossings: dict[int, list[float]]
    ordering_violations: list[tuple[int, int]]


def breakpoints(kind, family: Family, x: int, theta_window=None) -> BreakpointReport:
    """Breakpoints ``theta_{y,x}`` and the check of their monotone order in ``y``."""
    x = _check_x(family, x)
    pw = piecewise(kind, family, x)
    lo, hi = theta_window if theta_window is not None else (-math.inf, math.inf)
    thetas = pw.breakpoints
    thetas = thetas[(thetas >= lo) & (thetas <= hi)]
    crossings: dict[int, list[float]] = {}
    entering: dict[int, list[float]] = {}
    for c in pw.crossings:
        if lo <= c.theta <= hi:
            crossings.setdefault(c.y, []).append(c.theta)
            if c.entering:
                entering.setdefault(c.y, []).append(c.theta)
    # entries are read from the edge where y sits in the far tail
    entry = {}
    for y, ts in entering.items():
        from_below = (y < x) == (family.orientation > 0)
        entry[y] = min(ts) if from_below else max(ts)
    violations = []
    for side in ([y for y in sorted(entry) if y < x], [y for y in sorted(entry) if y > x]):
        for a, b in zip(side[:-1], side[1:]):
            if b == a + 1 and family.orientation * (entry[b] - entry[a]) < 0:
                violations.append((a, b))
    return BreakpointReport(thetas, entry, crossings, violations)


# -------------------------------------------------------------------- curves
@dataclass(frozen=True)
class PValueCurve:
    """Sampled p-value function with its jumps and plateau.

    ``jumps`` holds ``(theta, left_limit, right_limit)`` for every jump
    inside the grid range; ``plateau`` is ``(inf, sup)`` of ``{lambda = 1}``.
    """

    kind: TestKind
    family: Family
    x: int
    grid: np.ndarray
    values: np.ndarray
    jumps: list[tuple[float, float, float]]
    plateau: tuple[float, float]


def _fiducial_plateau(family: Family, x: int) -> tuple[float, float]:
    lo = tail_theta(family, x, 0.5, increasing=True)
    hi = tail_theta(family, x, 0.5, increasing=False)
    return (family.theta_space[0] if lo is None else lo, family.theta_space[1] if hi is None else hi)


def pvalue_curve(kind, family: Family, x: int, grid) -> PValueCurve:
    """``lambda(theta, x)`` on ``grid`` plus the exact jumps between its ends."""
    kind = TestKind.parse(kind)
    x = _check_x(family, x)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must hold at least two ascending values")
    family.check(grid)
    values = pvalues_on_grid(kind, family, x, grid)
    if kind is TestKind.FIDUCIAL:
        return PValueCurve(kind, family, x, grid, values, [], _fiducial_plateau(family, x))
    pw = _covering(kind, family, x, grid[0], grid[-1])
    jumps = [j for j in pw.jumps() if grid[0] <= j[0] <= grid[-1]]
    return PValueCurve(kind, family, x, grid, values, jumps, pw.plateau())


def _covering(kind, family, x, lo, hi) -> PiecewisePValue:
    """Piecewise structure whose window reaches ``[lo, hi]`` on the escape side."""
    tail = 1e-12
    pw = piecewise(kind, family, x, window_tail=tail)
    while tail > 1e-300 and (
        (pw.escape == "hi" and pw.window[1] < hi) or (pw.escape == "lo" and pw.window[0] > lo)
    ):
        tail *= 1e-20
        pw = piecewise(kind, family, x, window_tail=tail)
    return pw


# ---------------------------------------------------------------- nestedness
def level_gaps(pw: PiecewisePValue, side: str) -> list[tuple[float, float]]:
    """Levels ``alpha`` at which one interval bound is locally constant.

    Walking from the edge of the parameter space toward the plateau, the
    bound at level ``alpha`` is the first point where the p-value exceeds
    ``alpha``.  It stays put for every level between the running maximum
    before an upward jump and the value right after it.
    """
    segs = pw.segments
    order = range(len(segs)) if side == "lo" else range(len(segs) - 1, -1, -1)
    if segs[order[0]].full:
        # the plateau reaches the edge: the bound is pinned for every level
        return [(0.0, 1.0)]
    gaps = []
    running = None
    for i in order:
        seg = segs[i]
        first, last = (pw.start_value(i), pw.end_value(i)) if side == "lo" else (pw.end_value(i), pw.start_value(i))
        if running is not None and first > running:
            gaps.append((running, first))
        running = max(first, last) if running is None else max(running, first, last)
        if seg.full:
            break
    return gaps


def _intersect(a, b):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if lo < hi:
                out.append((lo, hi))
    return sorted(out)


@dataclass(frozen=True)
class NestednessRecord:
    """Thresholds for one observation.

    ``alpha_L`` / ``alpha_U`` / ``alpha_nest`` are the smallest levels at which
    the lower bound, the upper bound, or both at once stop moving (1.0 when
    that never happens).  A bound pinned to the edge of the parameter space
    counts as constant for ``alpha_nest`` but leaves its own threshold at 1.0.  ``alpha_U`` is None on infinite supports, where the
    upper edge is only scanned over a finite window.  ``alpha_L_tail`` is the
    right-tail probability at the first breakpoint, which must equal
    ``alpha_L`` when the first jump is upward.
    """

    x: int
    alpha_L: float
    alpha_U: float | None
    alpha_nest: float
    alpha_L_tail: float | None
    lower_gaps: list[tuple[float, float]] = field(repr=False, default_factory=list)
    upper_gaps: list[tuple[float, float]] = field(repr=False, default_factory=list)


@dataclass(frozen=True)
class NestednessReport:
    kind: TestKind
    family: Family
    records: list[NestednessRecord]
    failures: dict[int, str]

    @property
    def alpha_L(self) -> float:
        return min((r.alpha_L for r in self.records), default=1.0)

    @property
    def alpha_U(self) -> float | None:
        vals = [r.alpha_U for r in self.records]
        return None if any(v is None for v in vals) else min(vals, default=1.0)

    @property
    def alpha_nest(self) -> float:
        return min((r.alpha_nest for r in self.records), default=1.0)

    def record(self, x: int) -> NestednessRecord:
        for r in self.records:
            if r.x == x:
                return r
        raise KeyError(x)


def _nestedness_record(kind, family: Family, x: int) -> NestednessRecord:
    pw = piecewise(kind, family, x)
    lo_gaps = level_gaps(pw, "lo")
    hi_gaps = level_gaps(pw, "hi")
    # a pinned bound places no monotonicity constraint of its own
    alpha_l = 1.0 if pw.segments[0].full else (lo_gaps[0][0] if lo_gaps else 1.0)
    alpha_u = 1.0 if pw.segments[-1].full else (hi_gaps[0][0] if hi_gaps else 1.0)
    both = _intersect(lo_gaps, hi_gaps)
    alpha_nest = both[0][0] if both else 1.0
    # right-tail p-value at the first breakpoint from the lower edge
    tail = None
    if family.orientation > 0 and not pw.segments[0].full:
        tail = float(sf(family, pw.segments[0].hi, x, check=False))
    if not family.finite_support:
        alpha_u = None
    return NestednessRecord(x, alpha_l, alpha_u, alpha_nest, tail, lo_gaps, hi_gaps)


def nestedness_thresholds(kind, family: Family, xs=None) -> NestednessReport:
    """Nestedness thresholds for every ``x`` (default: the whole binomial support).

    Infinite supports need an explicit ``xs``.  Per-x errors are collected
    in ``failures`` instead of aborting the report.
    """
    kind = _strict(kind)
    if xs is None:
        if not family.finite_support:
            raise DomainError(f"{family} has infinite support; pass the outcomes to scan")
        xs = range(0, family.size + 1)
    records, failures = [], {}
    for x in sorted(int(v) for v in xs):
        try:
            _check_x(family, x)
            records.append(_nestedness_record(kind, family, x))
        except (RuntimeError, ValueError, ArithmeticError) as exc:
            failures[x] = str(exc)
    return NestednessReport(kind, family, records, failures)


# ----------------------------------------------------------- bimonotonicity
@dataclass(frozen=True)
class Violation:
    """A smooth piece running against the required direction.

    On the segment starting at ``theta0`` the p-value moves the wrong way up
    to (side ``"l"``) or from (side ``"u"``) the stationary point ``theta_r``.
    ``inside`` records whether ``theta_r`` lies in the segment.
    """

    theta0: float
    theta_r: float
    side: str
    segment: tuple[float, float]
    inside: bool


def _segment_violation(pw: PiecewisePValue, seg: Segment, side: str) -> Violation | None:
    r = pw.stationary_point(seg)
    if r is None:
        return None
    # the piece is 1 minus the complement mass, which peaks at r
    inside = seg.lo < r < seg.hi
    # a stationary point on a segment end (up to rounding) is no violation
    tol = SEGMENT_RTOL * max(1.0, abs(r))
    if side == "l" and r > seg.lo + tol:
        return Violation(seg.lo, r, "l", (seg.lo, seg.hi), inside)
    if side == "u" and r < seg.hi - tol:
        return Violation(seg.lo, r, "u", (seg.lo, seg.hi), inside)
    return None


def bimonotonicity_check(kind, family: Family, x: int, theta_window=None) -> list[Violation]:
    """Segments where the p-value decreases before its plateau or increases after it.

    Each smooth piece equals one minus the probability of the outcomes left
    out of the acceptance set; that probability has a single stationary
    point ``theta_r``, so the piece decreases on the left of ``theta_r`` and
    increases on its right.
    """
    kind = TestKind.parse(kind)
    if not kind.strict:
        raise DomainError("bimonotonicity_check needs a strictly two-sided test kind")
    x = _check_x(family, x)
    pw = piecewise(kind, family, x)
    lo, hi = theta_window if theta_window is not None else (-math.inf, math.inf)
    p_lo, p_hi = pw.plateau()
    out = []
    for seg in pw.segments:
        if seg.full or seg.hi <= lo or seg.lo >= hi:
            continue
        side = "l" if seg.hi <= p_lo else "u"
        v = _segment_violation(pw, seg, side)
        if v is not None:
            out.append(v)
    return out


def holes(kind, family: Family, x: int, alpha: float) -> list[tuple[float, float]]:
    """Maximal closed sets ``{lambda <= alpha}`` lying strictly inside the interval's hull."""
    kind = _strict(kind)
    x = _check_x(family, x)
    pw = _structure(kind, family, x, alpha)
    lower, upper = _bounds(pw, alpha)
    pieces = []
    for seg in pw.segments:
        if seg.full or seg.hi <= lower or seg.lo >= upper:
            continue
        b = pw.below_set(seg, alpha)
        if b is None:
            continue
        if pieces and pieces[-1][1] >= b[0]:
            pieces[-1] = (pieces[-1][0], b[1])
        else:
            pieces.append(b)
    return [(a, b) for a, b in pieces if a > lower and b < upper]


def poisson_geometric_mean(k1: int, k2: int) -> float:
    """Stationary point of ``P(k2 < X < k1)`` for the Poisson: ``((k1-1)!/k2!)^(1/(k1-k2-1))``."""
    if k1 < k2 + 2 or k2 < -1:
        raise DomainError("need k1 >= k2 + 2 and k2 >= -1")
    return math.exp((special.gammaln(k1) - special.gammaln(k2 + 1)) / (k1 - k2 - 1))


def poisson_stationary_point(k1: int, k2: int) -> float | None:
    """Numerical root of the derivative sum over ``k2 < k < k1``."""
    from .distributions import poisson

    return stationary_point(poisson(), k2 + 1, k1 - 1)
