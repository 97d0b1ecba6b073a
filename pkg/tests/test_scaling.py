"""Intensity transport maps and their mutual consistency."""

import numpy as np
import pytest
from scipy import stats as sps

from pvcell import fitting as F
from pvcell import scaling as sc
from pvcell.sampling import SimulationConfig, simulate_batch


def test_scale_sample_volume():
    out = sc.scale_sample(np.array([1.2]), "volume", 8.0)
    assert out[0] == pytest.approx(0.15)


def test_scale_sample_surface():
    out = sc.scale_sample(np.array([6.0]), "surface", 8.0)
    assert out[0] == pytest.approx(1.5)


def test_scale_sample_faces_identity():
    faces = np.array([12, 15, 18])
    out = sc.scale_sample(faces, "faces", 3.7)
    assert out is faces


def test_scale_sample_unknown_feature():
    with pytest.raises(ValueError):
        sc.scale_sample(np.ones(3), "perimeter", 2.0)
    with pytest.raises(ValueError):
        sc.scale_factor("volume", 0.0)


def test_scale_cdf_composition_is_exact():
    p = F.GenGammaParams(0.380, 1.287, 3.583)
    once = sc.scale_cdf(sc.scale_cdf(p.cdf, "volume", 2.0), "volume", 3.0)
    direct = sc.scale_cdf(p.cdf, "volume", 6.0)
    assert isinstance(once, sc.ScaledCdf)
    assert once.factor == direct.factor
    xs = np.linspace(0.0, 1.0, 100)
    assert np.array_equal(once(xs), direct(xs))


def test_scale_cdf_evaluates_by_composition():
    p = F.GenGammaParams(0.380, 1.287, 3.583)
    base = p.cdf
    scaled = sc.scale_cdf(base, "volume", 2.0)
    assert scaled(0.5) == pytest.approx(float(p.cdf(1.0)), rel=1e-14)
    assert sc.scale_cdf(base, "volume", 1.0) is base


def test_scale_cdf_median_maps():
    p = F.GammaParams(0.5, 3.0)
    lam = 4.0
    scaled = sc.scale_cdf(p.cdf, "volume", lam)
    med = p.ppf(0.5)
    assert scaled(med / lam) == pytest.approx(0.5, abs=1e-12)


def test_scale_density_keeps_mass():
    p = F.GenGammaParams(0.380, 1.287, 3.583)
    lam = 5.0
    dens = sc.scale_density(p.pdf, "volume", lam)
    xs = np.linspace(0.0, 3.0, 20000)
    assert np.trapezoid(dens(xs), xs) == pytest.approx(1.0, abs=1e-4)


def test_scale_params_gengamma_volume():
    p = F.GenGammaParams(0.380, 1.287, 3.583, std_errors=np.array([0.005, 0.006, 0.032]))
    out = sc.scale_params(p, "volume", 10.0)
    assert out.a == pytest.approx(0.0380)
    assert out.b == p.b and out.k == p.k
    assert out.std_errors[0] == pytest.approx(0.0005)
    assert out.std_errors[1] == pytest.approx(0.006)
    assert "scaled" in out.flags


def test_scale_params_identity_at_unit():
    p = F.GammaParams(0.4, 5.0)
    assert sc.scale_params(p, "volume", 1.0) is p


def test_scale_params_lognormal_log_shift():
    p = F.LognormalParams(0.2, 0.45)
    out = sc.scale_params(p, "volume", np.e)
    assert out.mu == pytest.approx(0.2 - 1.0)
    assert out.sigma == p.sigma
    surf = sc.scale_params(p, "surface", 8.0)
    assert surf.mu == pytest.approx(0.2 - (2.0 / 3.0) * np.log(8.0))


def test_scale_params_faces_rejected():
    with pytest.raises(ValueError):
        sc.scale_params(F.GammaParams(1.0, 2.0), "faces", 2.0)


def test_scaled_views_are_consistent():
    # sample, cdf and params views of the same transport agree
    p = F.GenGammaParams(0.380, 1.287, 3.583)
    lam = 7.0
    xs = np.linspace(0.01, 0.6, 40)
    via_params = sc.scale_params(p, "volume", lam).cdf(xs)
    via_cdf = sc.scale_cdf(p.cdf, "volume", lam)(xs)
    assert np.allclose(via_params, via_cdf, atol=1e-12)
    dens_params = sc.scale_params(p, "volume", lam).pdf(xs)
    dens_map = sc.scale_density(p.pdf, "volume", lam)(xs)
    assert np.allclose(dens_params, dens_map, atol=1e-10)


def test_scaled_sample_matches_fresh_simulation_smoke():
    # light two-sample version of the transport consistency claim
    lam = 8.0
    base = simulate_batch(SimulationConfig(lam=1.0, n_cells=3000, seed=51, threads=1))
    fresh = simulate_batch(SimulationConfig(lam=lam, n_cells=3000, seed=52, threads=1))
    scaled = sc.scale_sample(base.volumes, "volume", lam)
    assert sps.ks_2samp(fresh.volumes, scaled).pvalue > 0.001
    scaled_s = sc.scale_sample(base.surface_areas, "surface", lam)
    assert sps.ks_2samp(fresh.surface_areas, scaled_s).pvalue > 0.001
