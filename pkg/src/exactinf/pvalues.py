"""Two-sided exact tests: the fiducial (equal-tailed) p-value and the
strictly two-sided Sterne, Blaker, likelihood-ratio and score tests.

A strictly two-sided p-value is ``P_theta(T(theta, X) >= T(theta, x))``.  All
four statistics are unimodal in the outcome, so the acceptance set
``{k : T(theta, k) >= T(theta, x)}`` is a union of two tails cut at ``k2``
(lower) and ``k1`` (upper); see :class:`AcceptanceCut`.

Internally the statistics are compared through a *key*, a strictly increasing
transform of ``T`` (its logarithm for Sterne, Blaker and LR, ``T`` itself for
the score test).  Keys never overflow, and ties are resolved exactly as for
``T``: inclusively, with no tolerance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .distributions import DomainError, Family, cdf, logpmf, pmf, sf

__all__ = [
    "TestKind",
    "STRICT_KINDS",
    "AcceptanceCut",
    "statistic",
    "acceptance_cut",
    "fiducial_pvalue",
    "pvalue",
    "pvalue_limits",
    "pvalue_from_cut",
    "pvalues_on_grid",
    "pvalues_all_outcomes",
    "jump_probe_width",
]


class TestKind(str, enum.Enum):
    FIDUCIAL = "fiducial"
    STERNE = "sterne"
    BLAKER = "blaker"
    LR = "lr"
    SCORE = "score"

    __test__ = False  # keep pytest from collecting the enum

    @classmethod
    def parse(cls, value) -> "TestKind":
        if isinstance(value, cls):
            return value
        aliases = {"likelihoodratio": "lr", "likelihood_ratio": "lr", "likelihood-ratio": "lr"}
        v = str(value).lower()
        return cls(aliases.get(v, v))

    @property
    def strict(self) -> bool:
        return self is not TestKind.FIDUCIAL


STRICT_KINDS = (TestKind.STERNE, TestKind.BLAKER, TestKind.LR, TestKind.SCORE)


BREAKPOINT_RTOL = 1e-12


def jump_probe_width(theta: float) -> float:
    """Half-width of the probe used to detect a breakpoint at ``theta``."""
    return 1e-9 * max(1.0, abs(theta))


def _strict(kind) -> TestKind:
    kind = TestKind.parse(kind)
    if not kind.strict:
        raise DomainError("the fiducial test has no test statistic or acceptance cut")
    return kind


def _keys(kind: TestKind, family: Family, theta, k):
    """Order-preserving transform of ``T(theta, k)``; broadcasts, no domain checks."""
    theta = np.asarray(theta, dtype=float)
    k = np.asarray(k, dtype=float)
    if kind is TestKind.STERNE:
        return -logpmf(family, theta, k, check=False)
    if kind is TestKind.BLAKER:
        tail = np.minimum(cdf(family, theta, k, check=False), sf(family, theta, k, check=False))
        with np.errstate(divide="ignore"):
            return -np.log(tail)
    if kind is TestKind.LR:
        # log of sup L / L(theta); written so the value is exactly 0 at the MLE
        if family.name == "binomial":
            n = family.size
            return special.xlogy(k, k / (n * theta)) + special.xlogy(n - k, (n - k) / (n * (1 - theta)))
        if family.name == "negbinomial":
            r = family.size
            return special.xlogy(r, r / (k * theta)) + special.xlogy(k - r, (k - r) / (k * (1 - theta)))
        return special.xlogy(k, k / theta) - k + theta
    if kind is TestKind.SCORE:
        if family.name == "binomial":
            n = family.size
            return (k - n * theta) ** 2 / (n * theta * (1 - theta))
        if family.name == "negbinomial":
            r = family.size
            return (r - k * theta) ** 2 / (r * (1 - theta))
        return (k - theta) ** 2 / theta
    raise DomainError(f"no statistic for {kind}")


def statistic(kind, family: Family, theta0: float, x) -> float:
    """The test statistic ``T(theta0, x)``.

    Sterne: ``1 / P(X = x)``.  Blaker (with ``S(x) = x``):
    ``1 / min(P(X <= x), P(X >= x))``.  Likelihood ratio:
    ``sup L / L(theta0)`` with the closed-form MLE (a boundary MLE is the
    limiting value).  Score: ``U(theta0, x)**2 / I(theta0)``.
    """
    kind = _strict(kind)
    family.check(theta0, x)
    key = _keys(kind, family, theta0, x)
    out = key if kind is TestKind.SCORE else np.exp(key)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class AcceptanceCut:
    """Two-tail description of the acceptance set.

    The set is ``{k >= k1} | {k <= k2}``.  ``k1`` is ``inf`` when no upper
    point qualifies, ``k2`` is ``-inf`` when no lower point does.  When the
    whole support is accepted ``k2 >= k1 - 1`` (both equal ``x_theta`` when
    ``x`` minimizes the statistic).
    """

    k1: float
    k2: float
    x_theta: int

    @property
    def full(self) -> bool:
        return self.k2 >= self.k1 - 1

    def contains(self, k) -> bool:
        return k >= self.k1 or k <= self.k2

    def complement(self, family: Family) -> range:
        """Outcomes strictly between the two tails (empty when ``full``)."""
        if self.full:
            return range(0)
        lo, hi = family.support
        start = int(self.k2) + 1 if math.isfinite(self.k2) else lo
        stop = int(self.k1) if math.isfinite(self.k1) else int(hi) + 1
        return range(start, stop)


def _outcomes(family: Family, theta, x: int, hi: int | None = None) -> np.ndarray:
    lo = family.support[0]
    if hi is None:
        hi = max(int(x), family.upper_cutoff(theta))
    return np.arange(lo, hi + 1)


def _cut_from_keys(ks: np.ndarray, keys: np.ndarray, x: int) -> tuple[float, float, int]:
    i_min = int(np.argmin(keys))
    key_x = keys[int(x) - int(ks[0])]
    accepted = keys >= key_x
    upper = np.nonzero(accepted[i_min:])[0]
    lower = np.nonzero(accepted[: i_min + 1])[0]
    k1 = float(ks[i_min + upper[0]]) if upper.size else math.inf
    k2 = float(ks[lower[-1]]) if lower.size else -math.inf
    return k1, k2, int(ks[i_min])


def acceptance_cut(kind, family: Family, theta0: float, x: int) -> AcceptanceCut:
    """The cut ``(k1, k2)`` and the minimizer ``x_theta`` of ``T(theta0, .)``.

    Ties are included in the acceptance set.  For infinite supports the scan
    is extended until the upper cut is found; if it lies beyond any
    representable outcome ``k1`` is ``inf``.
    """
    kind = _strict(kind)
    family.check(theta0, x)
    ks = _outcomes(family, theta0, x)
    while True:
        keys = _keys(kind, family, theta0, ks)
        k1, k2, x_theta = _cut_from_keys(ks, keys, x)
        if math.isfinite(k1) or family.finite_support or ks[-1] > 10_000_000:
            break
        ks = _outcomes(family, theta0, x, hi=2 * int(ks[-1]))
    return AcceptanceCut(k1, k2, x_theta)


def pvalue_from_cut(family: Family, theta, cut: AcceptanceCut):
    """Mass of the acceptance set ``{k >= k1} | {k <= k2}`` at ``theta``."""
    if cut.full:
        return 1.0 if np.ndim(theta) == 0 else np.ones(np.shape(theta))
    return sf(family, theta, cut.k1, check=False) + cdf(family, theta, cut.k2, check=False)


def fiducial_pvalue(family: Family, theta0, x):
    """Twice the smaller one-sided p-value, capped at 1."""
    family.check(theta0, x)
    p = np.minimum(1.0, 2.0 * np.minimum(cdf(family, theta0, x, check=False), sf(family, theta0, x, check=False)))
    return float(p) if np.ndim(p) == 0 else p


def pvalue_limits(kind, family: Family, theta0: float, x: int):
    """One-sided limits of the p-value function at ``theta0``.

    Returns ``(left, right, cut_left, cut_right)`` where the limits are the
    acceptance-set masses at ``theta0`` for the cuts in force just below and
    just above it.
    """
    kind = _strict(kind)
    family.check(theta0, x)
    eps = jump_probe_width(theta0)
    lo, hi = family.theta_space
    t_left = max(theta0 - eps, (theta0 + lo) / 2)
    t_right = min(theta0 + eps, (theta0 + hi) / 2) if math.isfinite(hi) else theta0 + eps
    cut_left = acceptance_cut(kind, family, t_left, x)
    cut_right = acceptance_cut(kind, family, t_right, x)
    return (
        float(pvalue_from_cut(family, theta0, cut_left)),
        float(pvalue_from_cut(family, theta0, cut_right)),
        cut_left,
        cut_right,
    )


def _cut_change(kind, family: Family, x: int, inside: float, outside: float, cut: AcceptanceCut) -> float:
    """Bisect for the point between ``inside`` (cut equals ``cut``) and ``outside`` where the cut changes."""
    for _ in range(200):
        mid = inside + (outside - inside) / 2
        if mid in (inside, outside):
            break
        if acceptance_cut(kind, family, mid, x) == cut:
            inside = mid
        else:
            outside = mid
    return outside


def pvalue(kind, family: Family, theta0: float, x: int, *, liminf: bool = True) -> float:
    """Two-sided p-value ``lambda(theta0, x)``.

    With ``liminf=True`` (the default) a ``theta0`` sitting on a breakpoint of
    the acceptance cut gets the smaller of the two one-sided limits.  A
    breakpoint counts as "at" ``theta0`` when it lies within
    ``BREAKPOINT_RTOL * max(1, |theta0|)`` of it; the cheaper probe of width
    :func:`jump_probe_width` only decides whether that search is needed.
    """
    kind = TestKind.parse(kind)
    if kind is TestKind.FIDUCIAL:
        return fiducial_pvalue(family, theta0, x)
    cut = acceptance_cut(kind, family, theta0, x)
    p = float(pvalue_from_cut(family, theta0, cut))
    if not liminf:
        return p
    left, right, cut_left, cut_right = pvalue_limits(kind, family, theta0, x)
    eps = jump_probe_width(theta0)
    near = []
    if cut_left != cut:
        near.append(theta0 - _cut_change(kind, family, x, theta0, theta0 - eps, cut))
    if cut_right != cut:
        near.append(_cut_change(kind, family, x, theta0, theta0 + eps, cut) - theta0)
    if near and min(near) <= BREAKPOINT_RTOL * max(1.0, abs(theta0)):
        return min(left, right, p)
    return p


def pvalues_on_grid(kind, family: Family, x: int, thetas, *, chunk: int = 2048) -> np.ndarray:
    """``lambda(theta, x)`` for every theta of an array (no jump convention)."""
    kind = TestKind.parse(kind)
    thetas = np.asarray(thetas, dtype=float)
    family.check(thetas, x)
    if kind is TestKind.FIDUCIAL:
        return np.atleast_1d(fiducial_pvalue(family, thetas, x))
    out = np.empty(thetas.shape)
    for start in range(0, thetas.size, chunk):
        t = thetas[start : start + chunk, None]
        ks = _outcomes(family, t, x)
        keys = _keys(kind, family, t, ks[None, :])
        key_x = keys[:, int(x) - int(ks[0])][:, None]
        accepted = keys >= key_x
        mass = np.where(accepted, pmf(family, t, ks[None, :], check=False), 0.0).sum(axis=1)
        # outcomes beyond the truncation have extreme statistics and are accepted
        mass += sf(family, t[:, 0], ks[-1] + 1, check=False)
        # a full cut is exactly one, as in pvalue_from_cut
        out[start : start + chunk] = np.where(accepted.all(axis=1), 1.0, np.minimum(mass, 1.0))
    return out


def pvalues_all_outcomes(kind, family: Family, theta: float, *, tail: float = 1e-13):
    """``lambda(theta, k)`` for every outcome ``k`` carrying non-negligible mass.

    Returns ``(ks, probs, pvals)``.  For infinite supports the outcomes stop
    once the omitted upper tail is below ``tail``.
    """
    kind = TestKind.parse(kind)
    family.check(theta)
    lo = family.support[0]
    hi = family.upper_cutoff(theta, tail=tail) if not family.finite_support else family.size
    ks = np.arange(lo, hi + 1)
    probs = pmf(family, theta, ks, check=False)
    if kind is TestKind.FIDUCIAL:
        return ks, probs, fiducial_pvalue(family, theta, ks)
    keys = _keys(kind, family, theta, ks)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    # suffix sums: mass of all outcomes whose key is >= a given key
    suffix = np.cumsum(probs[order][::-1])[::-1]
    first = np.searchsorted(sorted_keys, keys, side="left")
    omitted = sf(family, theta, hi + 1, check=False)
    pvals = np.minimum(suffix[first] + omitted, 1.0)
    return ks, probs, pvals
