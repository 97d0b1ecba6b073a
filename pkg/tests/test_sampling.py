"""Sampler contracts: Poisson counts, exactness of the growth rule,
reproducibility, and the 1D analytic oracle."""

import numpy as np
import pytest
from scipy import stats as sps

from pvcell import geometry as g
from pvcell.sampling import (
    FeatureSample,
    SimulationConfig,
    _CellBuilder,
    cell_rng,
    sample_lengths_1d,
    sample_poisson_shell,
    simulate_batch,
    typical_cell,
    typical_cell_length_1d,
)


# ---------------------------------------------------------------------------
# Poisson shell sampling


def test_shell_mean_count_matches_mean_measure():
    # ball of radius 10 at unit intensity: expected count (4/3) pi 1e3
    rng = np.random.default_rng(5)
    expected = 4.0 / 3.0 * np.pi * 1e3
    counts = [len(sample_poisson_shell(1.0, 0.0, 10.0, rng)) for _ in range(10_000)]
    assert np.mean(counts) == pytest.approx(expected, rel=0.01)


def test_shell_zero_measure_region():
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert len(sample_poisson_shell(1.0, 3.0, 3.0, rng)) == 0


def test_shell_intensity_linearity():
    rng = np.random.default_rng(7)
    n1 = sum(len(sample_poisson_shell(1.0, 0.0, 5.0, rng)) for _ in range(400))
    n2 = sum(len(sample_poisson_shell(2.0, 0.0, 5.0, rng)) for _ in range(400))
    assert n2 / n1 == pytest.approx(2.0, rel=0.05)


def test_shell_counts_pass_poisson_chisquare():
    # small shell so the count PMF is well resolved over 1e4 repetitions
    rng = np.random.default_rng(11)
    lam, r = 1.0, 1.2
    mean = 4.0 / 3.0 * np.pi * r ** 3 * lam
    reps = 10_000
    counts = np.array([len(sample_poisson_shell(lam, 0.0, r, rng)) for _ in range(reps)])
    kmax = int(np.max(counts))
    observed = np.bincount(counts, minlength=kmax + 1).astype(float)
    probs = sps.poisson.pmf(np.arange(kmax + 1), mean)
    # collapse sparse tail bins so the chi-square approximation is sound
    cut = np.searchsorted(np.cumsum(probs), 1.0 - 5.0 / reps)
    obs = np.append(observed[:cut], observed[cut:].sum())
    exp = np.append(probs[:cut], 1.0 - probs[:cut].sum()) * reps
    stat = np.sum((obs - exp) ** 2 / exp)
    pvalue = sps.chi2.sf(stat, df=len(obs) - 1)
    assert pvalue > 1e-3


def test_shell_radii_follow_cubed_inverse_cdf():
    rng = np.random.default_rng(21)
    pts = sample_poisson_shell(1.0, 2.0, 4.0, rng)
    r3 = np.sum(pts ** 2, axis=1) ** 1.5
    stat = sps.kstest(r3, sps.uniform(loc=8.0, scale=56.0).cdf).statistic
    assert stat < 1.63 / np.sqrt(len(pts))


def test_shell_rejects_bad_radii():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_poisson_shell(1.0, 2.0, 1.0, rng)


# ---------------------------------------------------------------------------
# typical cells


def test_typical_cell_is_valid_polytope():
    for i in range(25):
        cell = typical_cell(1.0, cell_rng(42, i))
        g.validate_cell(cell)
        assert cell.n_faces >= 4
        # simple polytope relation for generic cells
        assert cell.n_vertices == 2 * cell.n_faces - 4


def test_typical_cell_contains_origin():
    cell = typical_cell(1.0, cell_rng(8, 0))
    planes = g._face_planes(cell)
    assert np.all(planes[:, :3] @ np.zeros(3) < planes[:, 3])


def test_typical_cell_rejects_bad_intensity():
    with pytest.raises(ValueError):
        typical_cell(0.0, cell_rng(0, 0))


def test_security_radius_soundness_small():
    # doubling the final region must not change the cell at all
    b = _CellBuilder()
    for i in range(50):
        nv, nf, in_a, radius = b.build(1.0, cell_rng(3, i), 2.0, 1.5)
        v1, s1, f1, _ = b.features(nv, nf, in_a)
        nv, nf, in_a, _ = b.build(1.0, cell_rng(3, i), 2.0, 1.5,
                                  min_radius=2.0 * radius, early_stop=False)
        v2, s2, f2, _ = b.features(nv, nf, in_a)
        assert f1 == f2
        assert v1 == pytest.approx(v2, rel=1e-9)
        assert s1 == pytest.approx(s2, rel=1e-9)


def test_simulate_batch_single_cell():
    fs = simulate_batch(SimulationConfig(lam=1.0, n_cells=1, seed=5))
    assert fs.n == 1
    assert fs.volumes[0] > 0
    assert fs.face_counts[0] >= 4


def test_simulate_batch_deterministic():
    cfg = SimulationConfig(lam=1.0, n_cells=300, seed=17, threads=1)
    a = simulate_batch(cfg)
    b = simulate_batch(cfg)
    assert np.array_equal(a.volumes, b.volumes)
    assert np.array_equal(a.surface_areas, b.surface_areas)
    assert np.array_equal(a.face_counts, b.face_counts)
    assert np.array_equal(a.vertex_counts, b.vertex_counts)


def test_simulate_batch_prefix_property():
    # substreams keyed by cell index: a longer run starts with the shorter one
    small = simulate_batch(SimulationConfig(lam=1.0, n_cells=50, seed=23, threads=1))
    large = simulate_batch(SimulationConfig(lam=1.0, n_cells=120, seed=23, threads=1))
    assert np.array_equal(small.volumes, large.volumes[:50])


def test_mean_volume_scales_inversely_with_intensity():
    fs8 = simulate_batch(SimulationConfig(lam=8.0, n_cells=3000, seed=4, threads=1))
    # E V = 1/lambda exactly; allow a 4 sigma Monte Carlo band
    se = fs8.volumes.std(ddof=1) / np.sqrt(fs8.n)
    assert abs(fs8.volumes.mean() - 0.125) < 4 * se


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(lam=-1.0, n_cells=10)
    with pytest.raises(ValueError):
        SimulationConfig(lam=1.0, n_cells=0)
    with pytest.raises(ValueError):
        SimulationConfig(lam=1.0, n_cells=10, growth_factor=0.9)


# ---------------------------------------------------------------------------
# 1D oracle


def test_length_1d_moments():
    rng = np.random.default_rng(100)
    x = sample_lengths_1d(1.0, 200_000, rng)
    # E = 1 and Var = 1/2 from the analytic density 4 y exp(-2y)
    assert x.mean() == pytest.approx(1.0, abs=0.005)
    assert x.var() == pytest.approx(0.5, rel=0.02)
    single = typical_cell_length_1d(1.0, np.random.default_rng(1))
    assert single > 0


def test_length_1d_matches_analytic_cdf():
    rng = np.random.default_rng(200)
    x = np.sort(sample_lengths_1d(1.0, 100_000, rng))
    cdf = 1.0 - (1.0 + 2.0 * x) * np.exp(-2.0 * x)
    i = np.arange(1, x.size + 1)
    sup = max(np.max(i / x.size - cdf), np.max(cdf - (i - 1) / x.size))
    assert sup < 0.006


def test_length_1d_intensity_scaling():
    rng = np.random.default_rng(300)
    a = sample_lengths_1d(2.0, 50_000, rng)
    b = sample_lengths_1d(1.0, 50_000, rng) / 2.0
    stat = sps.ks_2samp(a, b).pvalue
    assert stat > 0.01


# ---------------------------------------------------------------------------
# serialization


def test_csv_round_trip(tmp_path):
    fs = simulate_batch(SimulationConfig(lam=1.0, n_cells=40, seed=9))
    path = tmp_path / "cells.csv"
    fs.to_csv(path)
    back = FeatureSample.from_csv(path)
    assert back.lam == fs.lam and back.seed == fs.seed
    assert np.array_equal(back.volumes, fs.volumes)
    assert np.array_equal(back.vertex_counts, fs.vertex_counts)
    # formatting identity: rewriting parses to the same bytes
    path2 = tmp_path / "again.csv"
    back.to_csv(path2)
    assert path.read_bytes() == path2.read_bytes()


def test_json_round_trip(tmp_path):
    fs = simulate_batch(SimulationConfig(lam=2.0, n_cells=25, seed=1))
    path = tmp_path / "cells.json"
    fs.to_json(path)
    back = FeatureSample.read(path)
    assert back.lam == 2.0
    assert np.array_equal(back.volumes, fs.volumes)


def test_csv_header_required(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("cell_id,volume,surface_area,faces,vertices\n")
    with pytest.raises(ValueError):
        FeatureSample.from_csv(path)
