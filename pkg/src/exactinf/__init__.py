"""Exact two-sided tests and confidence intervals for discrete one-parameter families."""

from .diagnostics import (
    NestednessReport,
    PValueCurve,
    bimonotonicity_check,
    breakpoints,
    holes,
    nestedness_thresholds,
    poisson_geometric_mean,
    pvalue_curve,
)
from .distributions import DomainError, Family, binomial, cdf, logpmf, mle, negbinomial, pmf, pmf_dtheta, poisson, sf
from .intervals import ExactInterval, bounds_curve, fiducial_interval, interval, inverted_interval
from .oracle import CoverageProfile, exact_coverage, minimality_probe, nestedness_scan
from .pvalues import AcceptanceCut, TestKind, acceptance_cut, fiducial_pvalue, pvalue, statistic

__version__ = "0.1.0"

__all__ = [
    "AcceptanceCut",
    "CoverageProfile",
    "DomainError",
    "ExactInterval",
    "Family",
    "NestednessReport",
    "PValueCurve",
    "TestKind",
    "acceptance_cut",
    "bimonotonicity_check",
    "binomial",
    "bounds_curve",
    "breakpoints",
    "cdf",
    "exact_coverage",
    "fiducial_interval",
    "fiducial_pvalue",
    "holes",
    "interval",
    "inverted_interval",
    "logpmf",
    "minimality_probe",
    "mle",
    "negbinomial",
    "nestedness_scan",
    "nestedness_thresholds",
    "pmf",
    "pmf_dtheta",
    "poisson",
    "poisson_geometric_mean",
    "pvalue",
    "pvalue_curve",
    "sf",
    "statistic",
]
