"""Acceptance criteria; a summary line per criterion is printed at the end of the run."""

import math
import time

import numpy as np
import pytest

from exactinf import (
    bimonotonicity_check,
    binomial,
    bounds_curve,
    interval,
    negbinomial,
    nestedness_thresholds,
    poisson,
    pvalue,
    pvalue_curve,
)
from exactinf.diagnostics import poisson_geometric_mean, poisson_stationary_point
from exactinf.oracle import (
    detect_jumps,
    enumeration_check,
    exact_coverage,
    interior_grid,
    minimality_probe,
    nestedness_scan,
)
from exactinf.piecewise import _piecewise_cached
from exactinf.pvalues import STRICT_KINDS, TestKind

criterion = pytest.mark.criterion

BINOMIAL_20 = (binomial(20), range(21), interior_grid(0.0, 1.0, 5000))
POISSON_15 = (poisson(), range(16), interior_grid(0.0, 40.0, 5000))
ALPHAS = (0.01, 0.05, 0.1)


@criterion(1, "negative binomial Blaker example: p-values, 90% intervals, widths, < 1 s")
def test_negative_binomial_blaker_example():
    _piecewise_cached.cache_clear()
    start = time.perf_counter()
    p19 = pvalue("blaker", negbinomial(19), 0.625, 38)
    p20 = pvalue("blaker", negbinomial(20), 0.625, 40)
    iv19 = interval("blaker", negbinomial(19), 38, 0.1)
    iv20 = interval("blaker", negbinomial(20), 40, 0.1)
    elapsed = time.perf_counter() - start
    assert p19 == pytest.approx(0.0929, abs=5e-4)
    assert p20 == pytest.approx(0.106, abs=5e-4)
    assert (iv19.lower, iv19.upper) == pytest.approx((0.35992, 0.62279), abs=1e-4)
    assert (iv20.lower, iv20.upper) == pytest.approx((0.36202, 0.62689), abs=1e-4)
    assert iv19.width == pytest.approx(0.263, abs=1e-3)
    assert iv20.width == pytest.approx(0.265, abs=1e-3)
    assert elapsed < 1.0, elapsed


@criterion(2, "Poisson Sterne x=9: jump between 4.954163 and 4.954164, values at 15.6 and 15.95, < 1 s")
def test_poisson_sterne_example():
    _piecewise_cached.cache_clear()
    start = time.perf_counter()
    fam = poisson()
    values = [pvalue("sterne", fam, t, 9) for t in (4.954163, 4.954164, 15.6, 15.95)]
    elapsed = time.perf_counter() - start
    assert values[0] == pytest.approx(0.0722, abs=1e-3)
    assert values[1] == pytest.approx(0.1071, abs=1e-3)
    assert values[2] == pytest.approx(0.0993, abs=5e-4)
    assert values[3] == pytest.approx(0.1011, abs=5e-4)
    assert elapsed < 1.0, elapsed


@criterion(3, "first non-bimonotone point, Poisson x=2: Sterne 3, Blaker 3, LR 1, score sqrt(12)")
@pytest.mark.parametrize("kind,expected", [("sterne", 3.0), ("blaker", 3.0), ("lr", 1.0), ("score", math.sqrt(12.0))])
def test_first_non_bimonotone_point(kind, expected):
    violations = bimonotonicity_check(kind, poisson(), 2)
    first = min(violations, key=lambda v: v.theta0)
    assert first.theta_r == pytest.approx(expected, abs=1e-6)


@criterion(4, "Poisson stationary point equals the geometric-mean closed form (50 random cuts)")
def test_poisson_closed_form():
    rng = np.random.default_rng(20240601)
    pairs = []
    while len(pairs) < 50:
        k2 = int(rng.integers(0, 39))
        k1 = int(rng.integers(k2 + 2, 41))
        pairs.append((k1, k2))
    for k1, k2 in pairs:
        assert poisson_stationary_point(k1, k2) == pytest.approx(poisson_geometric_mean(k1, k2), rel=1e-10), (k1, k2)


@criterion(5, "Blaker binomial alpha_nest < 0.01 for n in {7, 10, 20, 50, 100}, < 60 s")
def test_blaker_alpha_nest_spot_set():
    _piecewise_cached.cache_clear()
    start = time.perf_counter()
    values = {n: nestedness_thresholds("blaker", binomial(n)) for n in (7, 10, 20, 50, 100)}
    elapsed = time.perf_counter() - start
    for n, rep in values.items():
        assert rep.failures == {}, (n, rep.failures)
        assert rep.alpha_nest < 0.01, (n, rep.alpha_nest)
    assert elapsed < 60.0, elapsed


@criterion(6, "exact coverage >= 1 - alpha on 2001 points: binomial n in {5, 20}, Poisson, all kinds")
@pytest.mark.parametrize("kind", list(TestKind), ids=lambda k: k.value)
@pytest.mark.parametrize(
    "family,grid",
    [(binomial(5), interior_grid(0, 1, 2001)), (binomial(20), interior_grid(0, 1, 2001)), (poisson(), interior_grid(0, 30, 2001))],
    ids=["binomial5", "binomial20", "poisson"],
)
def test_exact_coverage(kind, family, grid):
    for prof in exact_coverage(kind, family, list(ALPHAS), grid, tail=1e-13):
        assert prof.min_coverage >= 1.0 - prof.alpha, (prof.alpha, prof.min_coverage, prof.argmin)


@criterion(7, "fiducial: no jumps on 5000-point grids, strictly nested bounds on 500 levels")
@pytest.mark.parametrize("family,xs,grid", [BINOMIAL_20, POISSON_15], ids=["binomial20", "poisson"])
def test_fiducial_continuity_and_strict_nesting(family, xs, grid):
    alphas = np.linspace(0.001, 0.999, 500)
    for x in xs:
        assert detect_jumps("fiducial", family, x, grid) == [], x
        assert pvalue_curve("fiducial", family, x, grid).jumps == []
        assert bounds_curve("fiducial", family, x, alphas).strictly_nested, x


@criterion(8, "strict kinds: every x has a jump and a flat-both-bounds window; fiducial has neither")
@pytest.mark.parametrize("kind", ["fiducial", *STRICT_KINDS], ids=lambda k: TestKind.parse(k).value)
@pytest.mark.parametrize("family,xs,grid", [BINOMIAL_20, POISSON_15], ids=["binomial20", "poisson"])
def test_jumps_and_flat_windows(kind, family, xs, grid):
    alphas = np.linspace(0.001, 0.999, 1000)
    for x in xs:
        jumps = pvalue_curve(kind, family, x, grid).jumps
        found = detect_jumps(kind, family, x, grid)
        windows = nestedness_scan(kind, family, x, alphas)
        if TestKind.parse(kind) is TestKind.FIDUCIAL:
            assert not jumps and not found and not windows, x
        else:
            assert jumps and found and windows, x


@criterion(9, "cut-based p-values equal direct enumeration, binomial n <= 8, all kinds, abs 1e-12")
@pytest.mark.parametrize("n", range(1, 9))
def test_enumeration_oracle(n):
    worst, where = enumeration_check(binomial(n))
    assert worst <= 1e-12, where


@criterion(10, "Blaker interval inside Clopper-Pearson for n in {5, 20, 50}, all x, three levels")
@pytest.mark.parametrize("n", (5, 20, 50))
def test_blaker_inside_clopper_pearson(n):
    fam = binomial(n)
    for x in range(n + 1):
        for alpha in ALPHAS:
            b = interval("blaker", fam, x, alpha)
            cp = interval("fiducial", fam, x, alpha)
            assert cp.lower <= b.lower and b.upper <= cp.upper, (x, alpha)


@criterion(11, "fiducial bounds, binomial n=20, alpha=0.05: inward 1e-3 move breaks tail coverage, outward never")
def test_minimality_probe():
    results, monotone = minimality_probe(binomial(20), 0.05, delta=1e-3, grid_size=2001)
    assert monotone
    assert len(results) == 42
    for r in results:
        assert r.inward_violates, (r.x, r.side)
        assert r.outward_preserves, (r.x, r.side)
