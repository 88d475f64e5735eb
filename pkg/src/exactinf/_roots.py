"""Bracketed root finding shared by the interval and diagnostic code."""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, special

from .distributions import Family, cdf, sf

XTOL = 1e-300
RTOL = 1e-15


def brentq(f, a: float, b: float) -> float:
    """``scipy.optimize.brentq`` at (near) machine precision."""
    return optimize.brentq(f, a, b, xtol=XTOL, rtol=RTOL, maxiter=500)


def bisect_predicate(pred, inside: float, outside: float, *, max_iter: int = 200) -> tuple[float, float]:
    """Shrink ``[inside, outside]`` around the switch of a boolean ``pred``.

    ``pred(inside)`` is assumed to differ from ``pred(outside)``.  Bisection
    stops once the midpoint is no longer representable; the final pair is
    returned in the original roles.
    """
    p_in = pred(inside)
    for _ in range(max_iter):
        mid = inside + (outside - inside) / 2
        if mid == inside or mid == outside:
            break
        if pred(mid) == p_in:
            inside = mid
        else:
            outside = mid
    return inside, outside


def poisson_upper_bracket(x: int) -> float:
    return x + 10.0 * math.sqrt(x + 1.0) + 20.0


def increasing_tail(family: Family, theta, x):
    """The tail probability at ``x`` that increases with theta."""
    if family.orientation > 0:
        return sf(family, theta, x, check=False)
    return cdf(family, theta, x, check=False)


def decreasing_tail(family: Family, theta, x):
    if family.orientation > 0:
        return cdf(family, theta, x, check=False)
    return sf(family, theta, x, check=False)


def tail_theta(family: Family, x: int, prob: float, *, increasing: bool) -> float | None:
    """Solve ``tail(theta, x) == prob`` for the increasing or decreasing tail.

    Returns ``None`` when the tail is identically 1 (``x`` at the matching end
    of the support), in which case the bound is the edge of the parameter space.
    """
    tail = increasing_tail if increasing else decreasing_tail
    # P(X >= first) and P(X <= last) are identically one
    first, last = family.support
    if x == (first if increasing == (family.orientation > 0) else last):
        return None
    lo, hi = family.theta_space
    if not math.isfinite(hi):
        hi = poisson_upper_bracket(x)
        while (tail(family, hi, x) - prob) * (tail(family, lo, x) - prob) > 0 and hi < 1e300:
            hi *= 2.0
    f_lo = float(tail(family, lo, x)) - prob
    f_hi = float(tail(family, hi, x)) - prob
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        return None
    a, b = _log_bracket(lambda t: tail(family, t, x) - prob, lo, hi, f_lo)
    return brentq(lambda t: float(tail(family, t, x)) - prob, a, b)


def _log_bracket(f, lo: float, hi: float, f_lo: float) -> tuple[float, float]:
    """Narrow ``[lo, hi]`` to one cell of a grid that is logarithmic near both ends.

    Roots can sit hundreds of orders of magnitude away from the ends, which
    plain bisection on ``[lo, hi]`` reaches only slowly.
    """
    if hi == 1.0:
        grid = special.expit(np.linspace(-745.0, 40.0, 80))
    else:
        grid = np.geomspace(max(hi * 1e-300, 1e-300), hi, 80)
    grid = np.unique(np.concatenate(([lo], grid[(grid > lo) & (grid < hi)], [hi])))
    vals = np.asarray(f(grid), dtype=float)
    flip = np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]
    if flip.size == 0:
        return lo, hi
    i = int(flip[0])
    return float(grid[i]), float(grid[i + 1])
