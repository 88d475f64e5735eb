"""Discrete one-parameter families: binomial, Poisson and negative binomial.

Probabilities are evaluated in log space (log-gamma coefficients) and tails
through the regularized incomplete beta/gamma functions, so ``n`` and ``x``
in the tens of thousands are handled without overflow.

The negative binomial uses the *trials* parameterization: ``X`` is the number
of trials needed to observe the ``k``-th success, so the support starts at
``k`` and ``P(X <= x)`` increases with the success probability.  The
``orientation`` attribute records that direction (+1 when the cdf decreases
in theta, -1 when it increases).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "DomainError",
    "Family",
    "binomial",
    "poisson",
    "negbinomial",
    "pmf",
    "logpmf",
    "cdf",
    "sf",
    "pmf_dtheta",
    "mle",
]


class DomainError(ValueError):
    """Raised when a parameter or an outcome lies outside its admissible set."""


@dataclass(frozen=True)
class Family:
    """A discrete family in the class of stochastically monotone models.

    Parameters
    ----------
    name : {"binomial", "poisson", "negbinomial"}
    size : int or None
        ``n`` for the binomial, ``k`` (required successes) for the negative
        binomial, ``None`` for the Poisson.
    """

    name: str
    size: int | None = None

    def __post_init__(self):
        if self.name not in ("binomial", "poisson", "negbinomial"):
            raise DomainError(f"unknown family {self.name!r}")
        if self.name == "poisson":
            if self.size is not None:
                raise DomainError("the Poisson family takes no size parameter")
        else:
            if self.size is None or int(self.size) != self.size or self.size < 1:
                raise DomainError(f"{self.name} needs a positive integer size, got {self.size!r}")
            object.__setattr__(self, "size", int(self.size))

    def __str__(self):
        if self.name == "binomial":
            return f"Binomial(n={self.size})"
        if self.name == "negbinomial":
            return f"NegBinomial(k={self.size})"
        return "Poisson"

    @property
    def theta_space(self) -> tuple[float, float]:
        """Open parameter interval as ``(inf, sup)``."""
        return (0.0, math.inf) if self.name == "poisson" else (0.0, 1.0)

    @property
    def support(self) -> tuple[int, float]:
        """Integer support as ``(first, last)``; ``last`` may be ``inf``."""
        if self.name == "binomial":
            return 0, self.size
        if self.name == "negbinomial":
            return self.size, math.inf
        return 0, math.inf

    @property
    def finite_support(self) -> bool:
        return self.name == "binomial"

    @property
    def orientation(self) -> int:
        return -1 if self.name == "negbinomial" else 1

    def in_support(self, x) -> bool:
        lo, hi = self.support
        return float(x) == int(x) and lo <= x <= hi

    def in_theta_space(self, theta) -> bool:
        lo, hi = self.theta_space
        return lo < theta < hi

    def check(self, theta, x=None):
        """Raise :class:`DomainError` unless ``theta`` is interior and ``x`` in the support."""
        lo, hi = self.theta_space
        if not np.all((np.asarray(theta) > lo) & (np.asarray(theta) < hi)):
            raise DomainError(f"theta={theta!r} outside the open parameter space {self.theta_space} of {self}")
        if x is not None:
            xs = np.atleast_1d(x)
            slo, shi = self.support
            if not np.all((xs == np.floor(xs)) & (xs >= slo) & (xs <= shi)):
                raise DomainError(f"x={x!r} outside the support of {self}")

    def mean(self, theta):
        if self.name == "binomial":
            return self.size * theta
        if self.name == "negbinomial":
            return self.size / theta
        return theta

    def std(self, theta):
        if self.name == "binomial":
            return np.sqrt(self.size * theta * (1 - theta))
        if self.name == "negbinomial":
            return np.sqrt(self.size * (1 - theta)) / theta
        return np.sqrt(theta)

    def upper_cutoff(self, theta, tail=1e-18) -> int:
        """An integer ``K`` with ``P(X > K)`` far below ``tail``.

        For the binomial this is simply ``n``.  For infinite supports the
        cutoff starts at a generous mean + 12 sd and is extended until the
        exact upper tail clears ``tail``.
        """
        if self.finite_support:
            return self.size
        # the heaviest upper tail sits at the largest mean
        theta = float(np.min(theta) if self.name == "negbinomial" else np.max(theta))
        K = int(math.ceil(self.mean(theta) + 12 * self.std(theta) + 20))
        while sf(self, theta, K + 1, check=False) > tail:
            K *= 2
        return K


def binomial(n: int) -> Family:
    return Family("binomial", n)


def poisson() -> Family:
    return Family("poisson")


def negbinomial(k: int) -> Family:
    return Family("negbinomial", k)


def _log_coef(family: Family, x):
    """Log of the combinatorial factor of the pmf (``-log x!`` for the Poisson)."""
    if family.name == "binomial":
        n = family.size
        # a - (b + c) keeps C(n, x) and C(n, n - x) bitwise identical.
        return special.gammaln(n + 1.0) - (special.gammaln(x + 1.0) + special.gammaln(n - x + 1.0))
    if family.name == "negbinomial":
        k = family.size
        return special.gammaln(x) - (special.gammaln(k) + special.gammaln(x - k + 1.0))
    return -special.gammaln(x + 1.0)


def _loglik(family: Family, theta, x):
    """Kernel of the log-likelihood; boundary values of theta are allowed."""
    if family.name == "binomial":
        return special.xlogy(x, theta) + special.xlog1py(family.size - x, -theta)
    if family.name == "negbinomial":
        return special.xlogy(family.size, theta) + special.xlog1py(x - family.size, -theta)
    return special.xlogy(x, theta) - theta


def logpmf(family: Family, theta, x, *, check: bool = True):
    """Natural log of ``P_theta(X = x)``; broadcasts over array arguments."""
    if check:
        family.check(theta, x)
    x = np.asarray(x, dtype=float)
    return _log_coef(family, x) + _loglik(family, np.asarray(theta, dtype=float), x)


def pmf(family: Family, theta, x, *, check: bool = True):
    """``P_theta(X = x)``, computed as ``exp(logpmf)``."""
    out = np.exp(logpmf(family, theta, x, check=check))
    return float(out) if np.ndim(out) == 0 else out


def cdf(family: Family, theta, x, *, check: bool = True):
    """``P_theta(X <= x)``.

    ``x`` may be any real (including ``+-inf``); values below the support give
    0 and values at or above its last point give 1.
    """
    if check:
        family.check(theta)
    theta = np.asarray(theta, dtype=float)
    x = np.floor(np.asarray(x, dtype=float))
    lo, hi = family.support
    theta, x = np.broadcast_arrays(theta, x)
    out = np.zeros(theta.shape)
    inside = (x >= lo) & (x < hi)
    out[x >= hi] = 1.0
    if np.any(inside):
        t, xi = theta[inside], x[inside]
        if family.name == "binomial":
            out[inside] = special.bdtr(xi, family.size, t)
        elif family.name == "poisson":
            out[inside] = special.pdtr(xi, t)
        else:
            # X <= x  <=>  at least k successes among the first x trials
            out[inside] = special.bdtrc(family.size - 1, xi.astype(np.int64), t)
    return float(out) if out.ndim == 0 else out


def sf(family: Family, theta, x, *, check: bool = True):
    """``P_theta(X >= x)`` (note: inclusive of ``x``)."""
    if check:
        family.check(theta)
    theta = np.asarray(theta, dtype=float)
    x = np.ceil(np.asarray(x, dtype=float))
    lo, hi = family.support
    theta, x = np.broadcast_arrays(theta, x)
    out = np.zeros(theta.shape)
    inside = (x > lo) & (x <= hi)
    out[x <= lo] = 1.0
    if np.any(inside):
        t, xi = theta[inside], x[inside]
        if family.name == "binomial":
            out[inside] = special.bdtrc(xi - 1, family.size, t)
        elif family.name == "poisson":
            out[inside] = special.pdtrc(xi - 1, t)
        else:
            # X >= x  <=>  fewer than k successes among the first x - 1 trials
            out[inside] = special.bdtr(family.size - 1, (xi - 1).astype(np.int64), t)
    return float(out) if out.ndim == 0 else out


def score(family: Family, theta, x):
    """Derivative of the log-likelihood in theta."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    if family.name == "binomial":
        return x / theta - (family.size - x) / (1 - theta)
    if family.name == "negbinomial":
        return family.size / theta - (x - family.size) / (1 - theta)
    return x / theta - 1.0


def fisher_information(family: Family, theta):
    theta = np.asarray(theta, dtype=float)
    if family.name == "binomial":
        return family.size / (theta * (1 - theta))
    if family.name == "negbinomial":
        return family.size / (theta**2 * (1 - theta))
    return 1.0 / theta


def pmf_dtheta(family: Family, theta, x, *, check: bool = True):
    """Derivative of ``P_theta(X = x)`` with respect to theta (score times pmf)."""
    if check:
        family.check(theta, x)
    out = pmf(family, theta, x, check=False) * score(family, theta, x)
    return float(out) if np.ndim(out) == 0 else out


def mle(family: Family, x) -> float:
    """Maximum likelihood estimate; may sit on the boundary of the parameter space."""
    if not family.in_support(x):
        raise DomainError(f"x={x!r} outside the support of {family}")
    if family.name == "binomial":
        return x / family.size
    if family.name == "negbinomial":
        return family.size / x
    return float(x)
