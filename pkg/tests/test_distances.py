"""Distance metrics: exact KS evaluation, TV quadrature and family ranking."""

import numpy as np
import pytest

from pvcell import fitting as F
from pvcell.distances import compare_families, sup_distance, tv_distance
from pvcell.stats import DensityEstimate, EmpiricalDistribution, kde_epanechnikov


def test_sup_distance_quantile_construction():
    # points at the quantiles i/(n+1) keep the ECDF within 1/n of the CDF
    p = F.GenGammaParams(1.0, 1.0, 2.0)
    n = 200
    emp = EmpiricalDistribution(p.ppf(np.arange(1, n + 1) / (n + 1.0)))
    assert sup_distance(emp, p.cdf) <= 1.0 / n + 1e-12


def test_sup_distance_exact_small_case():
    emp = EmpiricalDistribution(np.array([0.5]))
    # ECDF jumps 0 -> 1 at 0.5; against U(0,1) the gap is attained from the left
    assert sup_distance(emp, lambda x: np.clip(x, 0.0, 1.0)) == pytest.approx(0.5)


def test_sup_distance_detects_shift():
    rng = np.random.default_rng(1)
    emp = EmpiricalDistribution(rng.exponential(1.0, 4000) + 0.3)
    p = F.GenGammaParams(1.0, 1.0, 1.0)
    assert sup_distance(emp, p.cdf) > 0.2


def test_sup_distance_accepts_scalar_cdf():
    emp = EmpiricalDistribution(np.array([0.2, 0.6, 0.9]))
    d_vec = sup_distance(emp, lambda x: np.clip(x, 0, 1))
    d_scalar = sup_distance(emp, lambda x: min(max(float(x), 0.0), 1.0))
    assert d_vec == pytest.approx(d_scalar)


def test_tv_distance_identical_densities_is_tail_only():
    p = F.GenGammaParams(0.5, 1.3, 2.0)
    grid = np.linspace(0.0, 8.0, 512)
    f = DensityEstimate(grid, p.pdf(grid), 0.05)
    assert tv_distance(f, p.pdf, p.cdf) <= 1e-4


def test_tv_distance_disjoint_supports_near_one():
    grid = np.linspace(0.0, 1.0, 400)
    f = DensityEstimate(grid, np.full(400, 1.0), 0.1)
    p = F.LognormalParams(np.log(50.0), 0.1)  # mass far to the right
    tv = tv_distance(f, p.pdf, p.cdf)
    assert tv == pytest.approx(1.0, abs=1e-3)


def test_tv_distance_requires_normalized_estimate():
    grid = np.linspace(0.0, 1.0, 50)
    bad = DensityEstimate(grid, np.full(50, 0.5), 0.1)
    with pytest.raises(ValueError):
        tv_distance(bad, lambda x: np.ones_like(x))


def test_tv_quadrature_grid_refinement(volumes_20k):
    fit = F.fit_gengamma(volumes_20k)
    hi = float(np.max(volumes_20k)) + 0.15
    coarse = kde_epanechnikov(volumes_20k, 0.05, np.linspace(0.0, hi, 512))
    fine = kde_epanechnikov(volumes_20k, 0.05, np.linspace(0.0, hi, 1024))
    tv_c = tv_distance(coarse, fit.pdf, fit.cdf)
    tv_f = tv_distance(fine, fit.pdf, fit.cdf)
    assert abs(tv_c - tv_f) < 1e-3


def test_distance_scale_invariance(volumes_20k):
    # scaling data, bandwidth and fit together leaves both distances fixed
    c = 5.0
    fit1 = F.fit_gengamma(volumes_20k)
    fit2 = F.GenGammaParams(c * fit1.a, fit1.b, fit1.k)
    emp1 = EmpiricalDistribution(volumes_20k)
    emp2 = EmpiricalDistribution(c * volumes_20k)
    assert sup_distance(emp1, fit1.cdf) == pytest.approx(
        sup_distance(emp2, fit2.cdf), abs=1e-6)
    grid = np.linspace(0.0, float(np.max(volumes_20k)) + 0.15, 600)
    kde1 = kde_epanechnikov(volumes_20k, 0.05, grid)
    kde2 = kde_epanechnikov(c * volumes_20k, c * 0.05, c * grid)
    assert tv_distance(kde1, fit1.pdf, fit1.cdf) == pytest.approx(
        tv_distance(kde2, fit2.pdf, fit2.cdf), abs=1e-6)


def test_compare_families_ranking(volumes_20k):
    fits = [F.fit_family(volumes_20k, fam) for fam in ("lognormal", "gengamma", "gamma")]
    rows = compare_families(volumes_20k, fits, bandwidth=0.05)
    assert [r.family for r in rows][0] == "gengamma"
    assert rows[0].tv <= rows[1].tv <= rows[2].tv
    assert rows[-1].family == "lognormal"


def test_compare_families_single_row(volumes_20k):
    fit = F.fit_gamma(volumes_20k)
    rows = compare_families(volumes_20k, [fit], bandwidth=0.05)
    assert len(rows) == 1
    assert rows[0].family == "gamma"
    assert 0.0 <= rows[0].sup <= 1.0
    assert 0.0 <= rows[0].tv <= 1.0 + 1e-6
