"""Piecewise description of a strictly two-sided p-value function.

For fixed ``x`` the acceptance set ``A(theta, x)`` changes only at isolated
parameter values (breakpoints).  Between two breakpoints the cut is constant
and ``lambda(theta, x) = P(X >= k1) + P(X <= k2)`` is smooth, so bounds,
holes and monotonicity defects can be computed segment by segment.

Breakpoints are located by scanning a dense grid for outcomes ``y`` whose
membership in ``A(theta, x)`` flips, i.e. sign changes of
``T(theta, y) - T(theta, x)``, and bisecting each flip to machine precision.

For infinite supports the side of the parameter space where probability
escapes to infinity carries infinitely many breakpoints; the scan stops at a
window edge where the fiducial tail of ``x`` is below ``window_tail`` and the
p-value there is recorded so callers can widen the window when needed.
"""

from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._roots import brentq, tail_theta
from .distributions import DomainError, Family, logpmf, pmf_dtheta, sf
from .pvalues import AcceptanceCut, TestKind, _cut_from_keys, _keys, _strict, acceptance_cut, pvalue_from_cut

__all__ = ["Segment", "Crossing", "PiecewisePValue", "piecewise"]

MERGE_RTOL = 1e-12
FINITE_TAIL = 1e-300
BLOCK_ENTRIES = 4_000_000  # cap on key-matrix entries held at once


@dataclass(frozen=True)
class Crossing:
    """Outcome ``y`` enters (or leaves) the acceptance set at ``theta``."""

    theta: float
    y: int
    entering: bool


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    cut: AcceptanceCut

    @property
    def full(self) -> bool:
        return self.cut.full


def _key_matrix(kind: TestKind, family: Family, thetas: np.ndarray, ks: np.ndarray) -> np.ndarray:
    """Keys of ``T(theta, k)`` on a grid; Blaker tails come from running sums."""
    t = thetas[:, None]
    if kind is TestKind.BLAKER:
        probs = np.exp(logpmf(family, t, ks[None, :], check=False))
        lower = np.cumsum(probs, axis=1)
        beyond = sf(family, thetas, ks[-1] + 1, check=False)
        upper = np.cumsum(probs[:, ::-1], axis=1)[:, ::-1] + beyond[:, None]
        with np.errstate(divide="ignore"):
            return -np.log(np.minimum(lower, upper))
    return _keys(kind, family, t, ks[None, :])


def _row_blocks(rows: int, cols: int):
    step = max(1, BLOCK_ENTRIES // max(1, cols))
    for start in range(0, rows, step):
        yield start, min(rows, start + step)


def _grid(family: Family, lo: float, hi: float, size: int) -> np.ndarray:
    if family.name == "poisson":
        return np.exp(np.linspace(math.log(lo), math.log(hi), size))
    z = np.linspace(special.logit(lo), special.logit(hi), size)
    g = special.expit(z)
    return g[(g > 0) & (g < 1)]


def scan_window(family: Family, x: int, tail: float = 1e-12) -> tuple[float, float]:
    """Parameter window outside which the fiducial tails of ``x`` are below ``tail``.

    Finite supports have finitely many breakpoints, so their window is taken
    down to tails of ``FINITE_TAIL`` whatever ``tail`` says.
    """
    if family.finite_support:
        tail = min(tail, FINITE_TAIL)
    lo_t = tail_theta(family, x, tail, increasing=True)
    hi_t = tail_theta(family, x, tail, increasing=False)
    if family.name == "poisson":
        # widen by the default desk-scale window
        hi_t = max(hi_t if hi_t is not None else 0.0, x + 15.0 * math.sqrt(x + 1.0) + 30.0)
        lo_t = min(lo_t, x / 20.0 + 1e-6) if lo_t is not None else None
    if lo_t is None or lo_t <= 0.0:
        lo_t = 1e-6 * hi_t if hi_t is not None else 1e-9
    if hi_t is None or (family.theta_space[1] == 1.0 and hi_t >= 1.0):
        hi_t = 1.0 - 1e-6 * (1.0 - lo_t)
    return float(lo_t), float(hi_t)


@dataclass
class PiecewisePValue:
    """The p-value function ``theta -> lambda(theta, x)`` of a strict test, as segments."""

    kind: TestKind
    family: Family
    x: int
    window: tuple[float, float]
    crossings: list[Crossing]
    segments: list[Segment]
    escape: str | None = None  # "lo", "hi" or None: truncated side of an infinite support
    _starts: list[float] = field(default_factory=list, repr=False)
    _ends: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._starts = [s.lo for s in self.segments]

    # ----------------------------------------------------------------- build
    @classmethod
    def build(cls, kind, family: Family, x: int, *, window_tail: float = 1e-12, grid_size: int = 4000):
        kind = _strict(kind)
        if not family.in_support(x):
            raise DomainError(f"x={x!r} outside the support of {family}")
        x = int(x)
        wlo, whi = scan_window(family, x, window_tail)
        thetas = _grid(family, wlo, whi, grid_size)
        extreme = thetas[0] if family.orientation < 0 else thetas[-1]
        K = max(x, family.upper_cutoff(extreme)) if not family.finite_support else family.size
        ks = np.arange(family.support[0], K + 1)
        ix = x - int(ks[0])

        g_parts, c_parts = [], []
        for a, b in _row_blocks(thetas.size, ks.size):
            # one overlapping row so flips between blocks are seen
            a = max(a - 1, 0)
            keys = _key_matrix(kind, family, thetas[a:b], ks)
            member = keys >= keys[:, ix : ix + 1]
            g, c = np.nonzero(member[1:] != member[:-1])
            g_parts.append(g + a)
            c_parts.append(c)
        g_idx, col = np.concatenate(g_parts), np.concatenate(c_parts)
        keep = col != ix
        g_idx, col = g_idx[keep], col[keep]
        crossings = _refine(kind, family, x, thetas, g_idx, ks[col])

        escape = None
        if not family.finite_support:
            escape = "hi" if family.orientation > 0 else "lo"
        segments = _segments(kind, family, x, crossings, (float(thetas[0]), float(thetas[-1])), escape)
        return cls(kind, family, x, (float(thetas[0]), float(thetas[-1])), crossings, segments, escape)

    # ------------------------------------------------------------- queries
    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([s.lo for s in self.segments[1:]])

    @property
    def domain(self) -> tuple[float, float]:
        return self.segments[0].lo, self.segments[-1].hi

    def segment_index(self, theta: float) -> int:
        return max(0, bisect.bisect_right(self._starts, theta) - 1)

    def segment_value(self, seg: Segment, theta):
        """The smooth piece of ``seg`` evaluated at ``theta`` (edges of the parameter space allowed)."""
        lo, hi = self.family.theta_space
        if theta <= lo or theta >= hi:
            return self.edge_limit(seg, "lo" if theta <= lo else "hi")
        return float(pvalue_from_cut(self.family, theta, seg.cut))

    def edge_limit(self, seg: Segment, side: str) -> float:
        """Limit of the segment's piece at an edge of the parameter space."""
        if seg.cut.full:
            return 1.0
        first = self.family.support[0]
        # side of the support where the mass concentrates
        to_top = (side == "hi") == (self.family.orientation > 0)
        if to_top:
            if self.family.finite_support:
                return 1.0 if seg.cut.contains(self.family.size) else 0.0
            return 1.0 if math.isfinite(seg.cut.k1) else 0.0
        return 1.0 if seg.cut.contains(first) else 0.0

    def start_value(self, i: int) -> float:
        if (i, 0) not in self._ends:
            seg = self.segments[i]
            self._ends[i, 0] = self.segment_value(seg, seg.lo)
        return self._ends[i, 0]

    def end_value(self, i: int) -> float:
        if (i, 1) not in self._ends:
            seg = self.segments[i]
            self._ends[i, 1] = self.segment_value(seg, seg.hi)
        return self._ends[i, 1]

    def value(self, theta: float) -> float:
        """``lambda(theta, x)`` with the liminf convention at breakpoints."""
        i = self.segment_index(theta)
        seg = self.segments[i]
        v = self.segment_value(seg, theta)
        if i > 0 and theta == seg.lo:
            v = min(v, self.segment_value(self.segments[i - 1], theta))
        return v

    def jumps(self) -> list[tuple[float, float, float]]:
        """``(theta, left_limit, right_limit)`` at every breakpoint."""
        out = []
        for i in range(1, len(self.segments)):
            b = self.segments[i].lo
            out.append((b, self.segment_value(self.segments[i - 1], b), self.segment_value(self.segments[i], b)))
        return out

    def plateau(self) -> tuple[float, float]:
        """The set ``{theta : lambda = 1}`` as ``(inf, sup)``."""
        full = [s for s in self.segments if s.full]
        if not full:
            raise RuntimeError(f"no plateau found for {self.kind.value}, {self.family}, x={self.x}")
        return full[0].lo, full[-1].hi

    def edge_values(self) -> dict[str, float]:
        """P-values at the truncated window edge (empty for finite supports)."""
        if self.escape == "hi":
            return {"hi": self.end_value(len(self.segments) - 1)}
        if self.escape == "lo":
            return {"lo": self.start_value(0)}
        return {}

    # ------------------------------------------------ set {lambda > alpha}
    def lower_bound(self, alpha: float) -> float:
        """``inf {theta : lambda(theta, x) > alpha}``."""
        for i, seg in enumerate(self.segments):
            if self.start_value(i) > alpha:
                return seg.lo
            if self.end_value(i) > alpha:
                return self._crossing(seg, alpha)
        raise RuntimeError("p-value never exceeds alpha")

    def upper_bound(self, alpha: float) -> float:
        """``sup {theta : lambda(theta, x) > alpha}``."""
        for i in range(len(self.segments) - 1, -1, -1):
            seg = self.segments[i]
            if self.end_value(i) > alpha:
                return seg.hi
            if self.start_value(i) > alpha:
                return self._crossing(seg, alpha)
        raise RuntimeError("p-value never exceeds alpha")

    def _crossing(self, seg: Segment, alpha: float) -> float:
        return brentq(lambda t: self.segment_value(seg, t) - alpha, seg.lo, seg.hi)

    def below_set(self, seg: Segment, alpha: float) -> tuple[float, float] | None:
        """``{theta in seg : piece(theta) <= alpha}`` as a closed interval, or None.

        The piece is a constant minus the mass of the cut's complement, which
        has a single interior maximum, so the set is an interval.
        """
        lo, hi = seg.lo, seg.hi
        f = lambda t: self.segment_value(seg, t) - alpha  # noqa: E731
        r = self.stationary_point(seg)
        m = min(max(r, lo), hi) if r is not None else (lo if f(lo) <= f(hi) else hi)
        if f(m) > 0:
            return None
        a = lo if f(lo) <= 0 else brentq(f, lo, m)
        b = hi if f(hi) <= 0 else brentq(f, m, hi)
        return a, b

    def stationary_point(self, seg: Segment) -> float | None:
        """Root of the theta-derivative of the complement mass of ``seg``'s cut."""
        comp = seg.cut.complement(self.family)
        if len(comp) == 0:
            return None
        return stationary_point(self.family, comp.start, comp.stop - 1)


def stationary_point(family: Family, first: int, last: int) -> float | None:
    """Interior root of ``sum_{k=first}^{last} d/dtheta P_theta(X = k)``.

    This is the maximizer of the probability of ``{first, ..., last}``; it
    exists when the block excludes both ends of the support.
    """
    ks = np.arange(first, last + 1)
    lo, hi = family.theta_space
    if first <= family.support[0] or (family.finite_support and last >= family.size):
        return None

    def deriv(t):
        return float(np.sum(pmf_dtheta(family, t, ks, check=False)))

    # the derivative changes sign exactly once, from + to -
    if family.name == "poisson":
        a, b = first / 2.0, 2.0 * last
        while deriv(a) <= 0 and a > 1e-300:
            a /= 2.0
        while deriv(b) >= 0 and b < 1e300:
            b *= 2.0
    else:
        t = special.expit(np.linspace(-30.0, 30.0, 1201))
        d = np.array([deriv(v) for v in t])
        flips = np.nonzero((d[:-1] > 0) & (d[1:] <= 0))[0]
        if flips.size == 0:
            return None
        a, b = t[flips[0]], t[flips[0] + 1]
        if deriv(b) == 0.0:
            return float(b)
    return brentq(deriv, a, b)


def _refine(kind, family, x, thetas, g_idx, ys) -> list[Crossing]:
    """Bisect each grid flip of ``T(theta, y) >= T(theta, x)`` to machine precision."""
    if g_idx.size == 0:
        return []

    def member(t, y):
        return _keys(kind, family, t, y) >= _keys(kind, family, t, np.full_like(y, x, dtype=float))

    ys = ys.astype(float)
    lo = thetas[g_idx].copy()
    hi = thetas[g_idx + 1].copy()
    m_lo = member(lo, ys)
    m_hi = member(hi, ys)
    # the grid keys (running sums for Blaker) can disagree with the exact keys
    # right at a crossing; widen those brackets by one grid cell on each side
    bad = m_lo == m_hi
    if np.any(bad):
        lo[bad] = thetas[np.maximum(g_idx[bad] - 1, 0)]
        hi[bad] = thetas[np.minimum(g_idx[bad] + 2, thetas.size - 1)]
        m_lo = member(lo, ys)
        m_hi = member(hi, ys)
        ok = m_lo != m_hi
        lo, hi, ys, m_lo, m_hi = lo[ok], hi[ok], ys[ok], m_lo[ok], m_hi[ok]
    for _ in range(200):
        mid = lo + (hi - lo) / 2
        if np.all((mid == lo) | (mid == hi)):
            break
        m_mid = member(mid, ys)
        same = m_mid == m_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    out = [Crossing(float(h), int(y), bool(e)) for h, y, e in zip(hi, ys, m_hi)]
    out.sort(key=lambda c: (c.theta, c.y))
    return out


def _cuts_at(kind, family, x, thetas) -> list[AcceptanceCut]:
    """Acceptance cuts at many parameter values from one key matrix.

    Rows whose decision is close to a tie, or whose upper cut falls beyond
    the truncated outcomes, are recomputed exactly.
    """
    extreme = thetas.min() if family.orientation < 0 else thetas.max()
    K = max(x, family.upper_cutoff(extreme)) if not family.finite_support else family.size
    ks = np.arange(family.support[0], K + 1)
    ix = x - int(ks[0])
    out = []
    for a, b in _row_blocks(thetas.size, ks.size):
        out.extend(_cuts_block(kind, family, x, thetas[a:b], ks, ix))
    return out


def _cuts_block(kind, family, x, thetas, ks, ix) -> list[AcceptanceCut]:
    keys = _key_matrix(kind, family, thetas, ks)
    out = []
    for t, row in zip(thetas, keys):
        k1, k2, x_theta = _cut_from_keys(ks, row, x)
        gap = np.abs(row - row[ix])
        gap[ix] = np.inf
        close = np.min(gap) <= 1e-9 * max(1.0, abs(row[ix]))
        if close or not math.isfinite(k1) and not family.finite_support:
            out.append(acceptance_cut(kind, family, float(t), x))
        else:
            out.append(AcceptanceCut(k1, k2, x_theta))
    return out


def _segments(kind, family, x, crossings, window, escape) -> list[Segment]:
    lo, hi = family.theta_space
    if escape == "hi":
        hi = window[1]
    elif escape == "lo":
        lo = window[0]
    cuts: list[float] = []
    for c in crossings:
        if not cuts or c.theta - cuts[-1] > MERGE_RTOL * max(1.0, c.theta):
            cuts.append(c.theta)
    edges = np.array([lo, *cuts, hi])
    a, b = edges[:-1], edges[1:]
    # a point inside each segment and inside the scanned window
    r_lo, r_hi = np.maximum(a, window[0]), np.minimum(b, window[1])
    reps = np.where(r_hi > r_lo, r_lo + (r_hi - r_lo) / 2, a + (b - a) / 2)
    found = _cuts_at(kind, family, x, reps)
    segs: list[Segment] = []
    for ai, bi, cut in zip(a, b, found):
        ai, bi = float(ai), float(bi)
        if segs and segs[-1].cut == cut:
            segs[-1] = Segment(segs[-1].lo, bi, cut)
        else:
            segs.append(Segment(ai, bi, cut))
    return segs


@functools.lru_cache(maxsize=1024)
def _piecewise_cached(kind: TestKind, family: Family, x: int, window_tail: float) -> PiecewisePValue:
    return PiecewisePValue.build(kind, family, x, window_tail=window_tail)


def piecewise(kind, family: Family, x: int, *, window_tail: float = 1e-12) -> PiecewisePValue:
    """Cached :meth:`PiecewisePValue.build`."""
    return _piecewise_cached(_strict(kind), family, int(x), float(window_tail))
