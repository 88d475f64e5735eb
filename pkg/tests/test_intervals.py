"""Fiducial and inverted intervals, bound curves."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactinf import (
    DomainError,
    binomial,
    bounds_curve,
    cdf,
    fiducial_interval,
    interval,
    inverted_interval,
    negbinomial,
    poisson,
    sf,
)
from exactinf.intervals import mle_inside
from exactinf.pvalues import STRICT_KINDS, pvalue, pvalues_on_grid


# ---------------------------------------------------------------- fiducial
def test_fiducial_closed_form_at_zero():
    iv = fiducial_interval(binomial(20), 0, 0.05)
    assert iv.lower == 0.0
    assert iv.upper == pytest.approx(1 - 0.025 ** (1 / 20), rel=1e-12)


def test_fiducial_closed_form_at_top():
    iv = fiducial_interval(binomial(20), 20, 0.1)
    assert iv.upper == 1.0
    assert iv.lower == pytest.approx(0.05 ** (1 / 20), rel=1e-12)


def test_fiducial_poisson_residuals():
    iv = fiducial_interval(poisson(), 2, 0.05)
    assert abs(sf(poisson(), iv.lower, 2) - 0.025) < 1e-10
    assert abs(cdf(poisson(), iv.upper, 2) - 0.025) < 1e-10
    # Garwood's chi-square form
    from scipy.stats import chi2

    assert iv.lower == pytest.approx(chi2.ppf(0.025, 4) / 2, rel=1e-9)
    assert iv.upper == pytest.approx(chi2.ppf(0.975, 6) / 2, rel=1e-9)


def test_fiducial_poisson_zero_is_pinned():
    iv = fiducial_interval(poisson(), 0, 0.05)
    assert iv.lower == 0.0
    assert iv.upper == pytest.approx(-math.log(0.025), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.floats(0.001, 0.5), st.data())
def test_fiducial_matches_clopper_pearson_beta_quantiles(n, alpha, data):
    from scipy.stats import beta

    x = data.draw(st.integers(0, n))
    iv = fiducial_interval(binomial(n), x, alpha)
    lo = 0.0 if x == 0 else beta.ppf(alpha / 2, x, n - x + 1)
    hi = 1.0 if x == n else beta.ppf(1 - alpha / 2, x + 1, n - x)
    assert iv.lower == pytest.approx(lo, rel=1e-8, abs=1e-300)
    assert iv.upper == pytest.approx(hi, rel=1e-8)
    assert iv.tail_split == (alpha / 2, alpha / 2)


def test_fiducial_negbinomial_residuals_mirror_orientation():
    fam = negbinomial(19)
    iv = fiducial_interval(fam, 38, 0.1)
    # orientation -1: the lower bound solves the lower-tail equation
    assert abs(cdf(fam, iv.lower, 38) - 0.05) < 1e-10
    assert abs(sf(fam, iv.upper, 38) - 0.05) < 1e-10
    assert iv.lower < 0.5 < iv.upper


def test_fiducial_negbinomial_first_outcome_pinned_above():
    iv = fiducial_interval(negbinomial(3), 3, 0.05)
    assert iv.upper == 1.0
    assert iv.lower == pytest.approx(0.025 ** (1 / 3), rel=1e-10)


# ---------------------------------------------------------------- inverted
@pytest.mark.parametrize("k,x,lo,hi", [(19, 38, 0.35992, 0.62279), (20, 40, 0.36202, 0.62689)])
def test_blaker_negbinomial_intervals(k, x, lo, hi):
    iv = inverted_interval("blaker", negbinomial(k), x, 0.1)
    assert iv.lower == pytest.approx(lo, abs=1e-4)
    assert iv.upper == pytest.approx(hi, abs=1e-4)


@pytest.mark.parametrize("kind", STRICT_KINDS)
def test_inverted_interval_is_hull_of_superlevel_set(kind):
    fam = binomial(20)
    grid = np.linspace(1e-4, 1 - 1e-4, 20001)
    for x in (0, 3, 10, 17, 20):
        iv = interval(kind, fam, x, 0.05)
        p = pvalues_on_grid(kind, fam, x, grid)
        inside = grid[p > 0.05]
        step = grid[1] - grid[0]
        assert iv.lower <= inside[0] and (inside[0] == grid[0] or inside[0] - step < iv.lower)
        assert inside[-1] <= iv.upper and (inside[-1] == grid[-1] or inside[-1] + step > iv.upper)


@pytest.mark.parametrize("kind", STRICT_KINDS)
def test_inverted_bound_is_crossing_or_jump(kind):
    fam = poisson()
    for x in (0, 2, 9):
        iv = interval(kind, fam, x, 0.1)
        for b, outward in ((iv.upper, 1.0), (iv.lower, -1.0)):
            if b <= 0:
                continue
            out = pvalue(kind, fam, b + outward * 1e-7 * max(1, b), x, liminf=False)
            assert out <= 0.1 + 1e-9
            inside = pvalue(kind, fam, b - outward * 1e-7 * max(1, b), x, liminf=False)
            assert inside >= 0.1 - 1e-6


@pytest.mark.parametrize("kind", ["fiducial", *STRICT_KINDS])
def test_mle_inside(kind):
    for fam, xs in ((binomial(20), range(21)), (poisson(), range(12)), (negbinomial(4), range(4, 16))):
        for x in xs:
            assert mle_inside(interval(kind, fam, x, 0.05))


def test_interval_near_one_contains_center():
    for kind in ["fiducial", *STRICT_KINDS]:
        iv = interval(kind, binomial(20), 10, 0.999)
        assert 0.5 in iv
        assert iv.width < 0.1


def test_blaker_inside_fiducial_small():
    for x in range(11):
        b = interval("blaker", binomial(10), x, 0.05)
        f = interval("fiducial", binomial(10), x, 0.05)
        assert f.lower <= b.lower and b.upper <= f.upper


def test_inverted_rejects_fiducial_and_bad_inputs():
    with pytest.raises(DomainError):
        inverted_interval("fiducial", binomial(5), 2, 0.05)
    with pytest.raises(DomainError):
        interval("blaker", binomial(5), 2, 1.0)
    with pytest.raises(DomainError):
        interval("blaker", binomial(5), 6, 0.05)
    with pytest.raises(DomainError):
        interval("fiducial", poisson(), -1, 0.05)


# ------------------------------------------------------------ bounds curve
def test_fiducial_bounds_strictly_nested():
    alphas = np.linspace(0.001, 0.999, 200)
    for fam, xs in ((binomial(20), range(21)), (poisson(), range(6))):
        for x in xs:
            bc = bounds_curve("fiducial", fam, x, alphas)
            assert bc.strictly_nested
            assert not bc.lower_flat.any() or np.all(bc.lower[bc.lower_flat] == 0.0)


@pytest.mark.parametrize("kind", STRICT_KINDS)
def test_strict_bounds_nested_not_strictly(kind):
    alphas = np.linspace(0.001, 0.999, 300)
    bc = bounds_curve(kind, binomial(20), 4, alphas)
    assert bc.nested
    assert bc.lower_flat.any() or bc.upper_flat.any()


def test_blaker_flat_segment_example():
    bc = bounds_curve("blaker", binomial(20), 4, np.linspace(0.005, 0.5, 500))
    assert bc.lower_flat.any() or bc.upper_flat.any()


def test_sterne_poisson_flat_both_window():
    bc = bounds_curve("sterne", poisson(), 9, np.linspace(0.001, 0.999, 1000))
    assert (bc.lower_flat & bc.upper_flat).any()


def test_bounds_rows_and_flags():
    bc = bounds_curve("blaker", binomial(5), 2, [0.01, 0.05, 0.1])
    rows = list(bc.rows())
    assert len(rows) == 3 and rows[-1][3] is False and rows[-1][4] is False
    assert all(lo <= hi for _, lo, hi, _, _ in rows)


def test_bounds_curve_validates_grid():
    with pytest.raises(DomainError):
        bounds_curve("blaker", binomial(5), 2, [0.1, 0.05])
    with pytest.raises(DomainError):
        bounds_curve("blaker", binomial(5), 2, [])
    with pytest.raises(DomainError):
        bounds_curve("blaker", binomial(5), 2, [0.0, 0.5])
