"""Diagnostics tests: phase split, TD-error recomputation, PCA, KDE."""

import numpy as np
import pytest

from tdexplore.config import desk_config
from tdexplore.diagnostics import (
    GridSpec,
    kde_density,
    log_td_errors,
    pca_project,
    phase_labels,
    run_diagnostics,
    scott_bandwidth,
)
from tdexplore.harness import run


class TestPhaseLabels:
    def test_exact_thirds(self):
        labels = phase_labels(9)
        assert list(labels) == ["early"] * 3 + ["intermediate"] * 3 + ["late"] * 3

    @pytest.mark.parametrize("n", [1, 2, 3, 10, 11, 100, 101])
    def test_sizes_differ_by_at_most_one(self, n):
        labels = phase_labels(n)
        counts = [int(np.sum(labels == p)) for p in ("early", "intermediate", "late")]
        assert sum(counts) == n
        nonzero = [c for c in counts if c > 0] or [0]
        assert max(counts) - min(nonzero) <= 1
        # contiguous: early indices all precede intermediate, which precede late
        order = {"early": 0, "intermediate": 1, "late": 2}
        ranks = [order[p] for p in labels]
        assert ranks == sorted(ranks)


class TestPca:
    def test_planar_data_in_4d_fully_explained(self):
        rng = np.random.default_rng(0)
        basis = np.array([[1.0, 0.5, 0.0, -0.5], [0.0, 1.0, 1.0, 0.2]])
        coords = rng.normal(size=(500, 2))
        data = coords @ basis + 3.0
        projected, ratio = pca_project(data, 2)
        assert abs(ratio - 1.0) < 1e-9
        assert projected.shape == (500, 2)

    def test_full_dimension_keeps_everything(self):
        rng = np.random.default_rng(1)
        data = rng.normal(size=(200, 3))
        projected, ratio = pca_project(data, 3)
        assert abs(ratio - 1.0) < 1e-12
        # distances are preserved by a full orthonormal projection
        d_orig = np.linalg.norm(data[0] - data[1])
        d_proj = np.linalg.norm(projected[0] - projected[1])
        assert abs(d_orig - d_proj) < 1e-9

    def test_explained_ratio_matches_generating_covariance(self):
        """diag(4, 1, 0.25, 0.01) data: top-2 ratio ~ 5 / 5.26."""
        rng = np.random.default_rng(2)
        scales = np.sqrt(np.array([4.0, 1.0, 0.25, 0.01]))
        data = rng.normal(size=(100_000, 4)) * scales
        _, ratio = pca_project(data, 2)
        assert abs(ratio - 5.0 / 5.26) < 0.01

    def test_projected_columns_uncorrelated(self):
        rng = np.random.default_rng(3)
        data = rng.normal(size=(2000, 4)) @ rng.normal(size=(4, 4))
        projected, _ = pca_project(data, 2)
        cov = np.cov(projected.T)
        assert abs(cov[0, 1]) < 1e-8 * max(cov[0, 0], cov[1, 1])

    def test_degenerate_data_raises(self):
        with pytest.raises(ValueError):
            pca_project(np.ones((50, 3)), 2)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        data = rng.normal(size=(100, 4))
        p1, r1 = pca_project(data, 2)
        p2, r2 = pca_project(data, 2)
        assert np.array_equal(p1, p2) and r1 == r2


class TestKde:
    def test_single_point_peak_at_nearest_cell(self):
        grid = GridSpec(-1, 1, -1, 1, 21, 21)
        out = kde_density(np.array([[0.31, -0.52]]), 0.1, grid)
        iy, ix = np.unravel_index(np.argmax(out.density), out.density.shape)
        xs, ys = grid.centers()
        assert abs(xs[ix] - 0.31) <= (2.0 / 21) / 2 + 1e-9
        assert abs(ys[iy] - (-0.52)) <= (2.0 / 21) / 2 + 1e-9

    def test_grid_normalization(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(500, 2))
        grid = GridSpec(-4, 4, -4, 4, 40, 40)
        out = kde_density(pts, None, grid)
        assert abs(out.density.sum() * grid.cell_area - 1.0) < 1e-6
        assert np.all(out.density >= 0)

    def test_reflection_symmetry(self):
        pts = np.array([[0.5, 0.0], [-0.5, 0.0]])
        grid = GridSpec(-1, 1, -1, 1, 20, 20)
        out = kde_density(pts, 0.2, grid)
        assert np.allclose(out.density, out.density[:, ::-1], atol=1e-12)

    def test_mode_near_true_mean_of_gaussian_sample(self):
        rng = np.random.default_rng(5)
        mean = np.array([1.2, -0.7])
        pts = rng.normal(size=(10_000, 2)) * 0.5 + mean
        bw = scott_bandwidth(pts)
        out = kde_density(pts, bw)
        iy, ix = np.unravel_index(np.argmax(out.density), out.density.shape)
        xs, ys = out.grid.centers()
        mode = np.array([xs[ix], ys[iy]])
        assert np.all(np.abs(mode - mean) < 2.0 * bw)

    def test_weighted_density_shifts_toward_heavy_points(self):
        pts = np.array([[-0.5, 0.0], [0.5, 0.0]])
        grid = GridSpec(-1, 1, -1, 1, 20, 20)
        out = kde_density(pts, 0.15, grid, weights=np.array([0.0, 1.0]))
        xs, _ = grid.centers()
        com = float((out.density.sum(axis=0) * xs).sum() / out.density.sum())
        assert com > 0.3

    def test_all_zero_weights_fall_back_to_uniform(self):
        pts = np.array([[-0.5, 0.0], [0.5, 0.0]])
        grid = GridSpec(-1, 1, -1, 1, 20, 20)
        a = kde_density(pts, 0.15, grid, weights=np.zeros(2))
        b = kde_density(pts, 0.15, grid)
        assert np.allclose(a.density, b.density)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            kde_density(np.empty((0, 2)), 0.1)
        with pytest.raises(ValueError):
            kde_density(np.array([[0.0, 0.0]]), -1.0)


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("diagrun")
    cfg = desk_config("td3", env="pointmass_dense", exploration="discover",
                      lam=0.3, total_steps=600, warmup_steps=200, seed=3,
                      eval_interval=300, log_transitions=True)
    run(cfg, str(out))
    return str(out)


class TestEndToEnd:

    def test_td_error_recomputation_idempotent(self, run_dir):
        a = log_td_errors(run_dir)
        b = log_td_errors(run_dir)
        assert np.array_equal(a.td_errors, b.td_errors)
        assert np.array_equal(a.states, b.states)
        assert np.all(np.isfinite(a.td_errors))

    def test_simple_cases_by_hand(self, run_dir):
        log = log_td_errors(run_dir)
        assert len(log.td_errors) == 600
        assert set(log.phases) == {"early", "intermediate", "late"}

    def test_pipeline_writes_all_csvs(self, run_dir, tmp_path):
        out = tmp_path / "diag"
        info = run_diagnostics(run_dir, str(out), grid_size=16)
        assert (out / "visitation.csv").exists()
        for phase in ("early", "intermediate", "late"):
            path = out / f"density_{phase}.csv"
            assert path.exists()
            rows = path.read_text().splitlines()
            assert rows[0] == "grid_x,grid_y,density,density_tderr_weighted"
            assert len(rows) == 1 + 16 * 16
        assert 0.0 < info["explained_variance_ratio"] <= 1.0

    def test_missing_transition_log_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            log_td_errors(str(tmp_path))
