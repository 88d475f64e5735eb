"""Confidence intervals: equal-tailed fiducial bounds and inverted strict tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._roots import tail_theta
from .distributions import DomainError, Family, mle
from .piecewise import PiecewisePValue, piecewise
from .pvalues import TestKind

__all__ = ["ExactInterval", "BoundsCurve", "fiducial_interval", "inverted_interval", "interval", "bounds_curve", "escape_limit"]


@dataclass(frozen=True)
class ExactInterval:
    """An interval ``(lower, upper)`` whose ends may sit on the edge of the parameter space.

    Attributes
    ----------
    tail_split : tuple of float or None
        The ``(alpha/2, alpha/2)`` tail allocation of a fiducial interval.
    """

    lower: float
    upper: float
    alpha: float
    x: int
    kind: TestKind
    family: Family
    tail_split: tuple[float, float] | None = None

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, theta) -> bool:
        return self.lower <= theta <= self.upper


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")


def _check_x(family: Family, x):
    if not family.in_support(x):
        raise DomainError(f"x={x!r} outside the support of {family}")
    return int(x)


def fiducial_interval(family: Family, x: int, alpha: float) -> ExactInterval:
    """Equal-tailed interval from the two one-sided tail equations.

    The lower bound solves "tail increasing in theta = alpha/2" and the upper
    bound "tail decreasing in theta = alpha/2"; a bound whose tail is
    identically one is the corresponding edge of the parameter space.

    Examples
    --------
    >>> from exactinf.distributions import binomial
    >>> iv = fiducial_interval(binomial(20), 0, 0.05)
    >>> iv.lower, round(iv.upper, 10) == round(1 - 0.025 ** (1 / 20), 10)
    (0.0, True)
    """
    _check_alpha(alpha)
    x = _check_x(family, x)
    lo_edge, hi_edge = family.theta_space
    half = alpha / 2.0
    lower = tail_theta(family, x, half, increasing=True)
    upper = tail_theta(family, x, half, increasing=False)
    return ExactInterval(
        lower=lo_edge if lower is None else lower,
        upper=hi_edge if upper is None else upper,
        alpha=alpha,
        x=x,
        kind=TestKind.FIDUCIAL,
        family=family,
        tail_split=(half, half),
    )


def escape_limit(kind, family: Family) -> float:
    """Limit of ``lambda(theta, x)`` toward the edge where probability escapes to infinity.

    It does not depend on ``x``.  The score test on the negative binomial
    keeps a bounded statistic as ``theta -> 0``: ``k * theta`` tends to a
    Gamma(r) variable and the p-value to ``P(Gamma(r) >= 2 r)``.  Every other
    combination tends to zero.
    """
    kind = TestKind.parse(kind)
    if kind is TestKind.SCORE and family.name == "negbinomial":
        r = float(family.size)
        return float(special.gammaincc(r, 2.0 * r))
    return 0.0


def _structure(kind, family: Family, x: int, alpha: float) -> PiecewisePValue:
    """Piecewise p-value whose scan window is wide enough for level ``alpha``.

    The window starts where the fiducial tails drop to ``alpha * 1e-4`` and is
    widened while the p-value at its truncated edge is not clearly below
    ``alpha``: within a tenth of the way from the edge limit up to ``alpha``.
    Levels below the edge limit need no widening, their bound is the edge.
    """
    limit = escape_limit(kind, family)
    target = limit + 0.1 * (alpha - limit) if alpha > limit else math.inf
    tail = min(alpha * 1e-4, 1e-5)
    pw = piecewise(kind, family, x, window_tail=tail)
    while any(v > target for v in pw.edge_values().values()) and tail > 1e-300:
        tail *= 1e-3
        pw = piecewise(kind, family, x, window_tail=tail)
    return pw


def _bounds(pw: PiecewisePValue, alpha: float) -> tuple[float, float]:
    """Hull of ``{lambda > alpha}``; an escape edge whose limit exceeds ``alpha`` is included."""
    lo_edge, hi_edge = pw.family.theta_space
    limit = escape_limit(pw.kind, pw.family)
    lower = lo_edge if pw.escape == "lo" and limit > alpha else pw.lower_bound(alpha)
    upper = hi_edge if pw.escape == "hi" and limit > alpha else pw.upper_bound(alpha)
    return lower, upper


def inverted_interval(kind, family: Family, x: int, alpha: float) -> ExactInterval:
    """Convex hull of ``{theta : lambda(theta, x) > alpha}`` for a strict test.

    Jumps across ``alpha`` put the bound on the jump location itself.

    Examples
    --------
    >>> from exactinf.distributions import negbinomial
    >>> iv = inverted_interval("blaker", negbinomial(19), 38, 0.1)
    >>> round(iv.lower, 4), round(iv.upper, 4)
    (0.3599, 0.6228)
    """
    kind = TestKind.parse(kind)
    if not kind.strict:
        raise DomainError("inverted_interval needs a strictly two-sided test kind")
    _check_alpha(alpha)
    x = _check_x(family, x)
    pw = _structure(kind, family, x, alpha)
    lower, upper = _bounds(pw, alpha)
    return ExactInterval(lower, upper, alpha, x, kind, family)


def interval(kind, family: Family, x: int, alpha: float) -> ExactInterval:
    """Dispatch to :func:`fiducial_interval` or :func:`inverted_interval`."""
    kind = TestKind.parse(kind)
    if kind is TestKind.FIDUCIAL:
        return fiducial_interval(family, x, alpha)
    return inverted_interval(kind, family, x, alpha)


@dataclass(frozen=True)
class BoundsCurve:
    """Bounds over an ascending alpha grid.

    ``lower_flat[i]`` / ``upper_flat[i]`` flag that the bound did not move
    (within ``tol``) between ``alphas[i]`` and ``alphas[i + 1]``; the last
    entry is always False.
    """

    kind: TestKind
    family: Family
    x: int
    alphas: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lower_flat: np.ndarray
    upper_flat: np.ndarray

    @property
    def nested(self) -> bool:
        return bool(np.all(np.diff(self.lower) >= 0) and np.all(np.diff(self.upper) <= 0))

    @property
    def strictly_nested(self) -> bool:
        """Both bounds strictly monotone, except bounds pinned to an edge of the parameter space."""
        lo_edge, hi_edge = self.family.theta_space
        dl, du = np.diff(self.lower), np.diff(self.upper)
        pinned_l = self.lower[1:] == lo_edge
        pinned_u = self.upper[1:] == hi_edge
        return bool(np.all((dl > 0) | pinned_l) and np.all((du < 0) | pinned_u))

    def rows(self):
        for a, lo, hi, fl, fu in zip(self.alphas, self.lower, self.upper, self.lower_flat, self.upper_flat):
            yield float(a), float(lo), float(hi), bool(fl), bool(fu)


def bounds_curve(kind, family: Family, x: int, alphas, *, tol: float = 1e-9) -> BoundsCurve:
    """Interval bounds for every level in ``alphas`` with flat-segment flags."""
    kind = TestKind.parse(kind)
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim != 1 or alphas.size == 0:
        raise DomainError("alpha grid must be a non-empty 1-d sequence")
    if np.any(np.diff(alphas) <= 0):
        raise DomainError("alpha grid must be strictly ascending")
    x = _check_x(family, x)
    if kind is TestKind.FIDUCIAL:
        ivs = [fiducial_interval(family, x, a) for a in alphas]
        lower = np.array([iv.lower for iv in ivs])
        upper = np.array([iv.upper for iv in ivs])
    else:
        for a in alphas:
            _check_alpha(a)
        pw = _structure(kind, family, x, float(alphas[0]))
        pairs = np.array([_bounds(pw, a) for a in alphas])
        lower, upper = pairs[:, 0], pairs[:, 1]
    flat_l = np.append(_flat(lower, tol), False)
    flat_u = np.append(_flat(upper, tol), False)
    return BoundsCurve(kind, family, x, alphas, lower, upper, flat_l, flat_u)


def _flat(values: np.ndarray, tol: float) -> np.ndarray:
    d = np.abs(np.diff(values))
    scale = np.maximum(1.0, np.abs(values[:-1]))
    with np.errstate(invalid="ignore"):
        return np.where(np.isfinite(d), d <= tol * scale, values[1:] == values[:-1])


def mle_inside(iv: ExactInterval) -> bool:
    """Whether an interior maximum likelihood estimate lies in the interval."""
    t = mle(iv.family, iv.x)
    return not iv.family.in_theta_space(t) or t in iv or math.isclose(t, iv.lower) or math.isclose(t, iv.upper)
