import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from sdelab import (
    ConfigurationError,
    PathEnsemble,
    TimeGrid,
    refine,
    running_max,
    sample_path,
)


class TestTimeGrid:
    def test_node_count(self):
        grid = TimeGrid(1.0, 0.5)
        assert grid.n == 2
        assert len(grid.times()) == 3
        np.testing.assert_allclose(grid.times(), [0.0, 0.5, 1.0])

    @pytest.mark.parametrize(
        "horizon,dt", [(1.0, -0.1), (1.0, 0.0), (-1.0, 0.1), (1.0, 0.3), (0.0, 0.1)]
    )
    def test_invalid_grids_rejected(self, horizon, dt):
        with pytest.raises(ConfigurationError):
            TimeGrid(horizon, dt)

    def test_index_of(self):
        grid = TimeGrid(1.0, 0.25)
        assert grid.index_of(0.5) == 2
        from sdelab import DomainError

        with pytest.raises(DomainError):
            grid.index_of(0.3)

    def test_refined_halves_step(self):
        grid = TimeGrid(2.0, 0.5)
        assert grid.refined().dt == 0.25
        assert grid.refined().n == 2 * grid.n


class TestSampling:
    def test_starts_at_zero(self):
        path = sample_path(TimeGrid(1.0, 0.5), 7, 3)
        assert path.values[0] == 0.0
        assert len(path.values) == 3

    def test_bit_identical_regeneration(self):
        grid = TimeGrid(1.0, 0.01)
        a = sample_path(grid, 123, 11)
        b = sample_path(grid, 123, 11)
        assert np.array_equal(a.values, b.values)

    def test_streams_differ_across_replicates_and_seeds(self):
        grid = TimeGrid(1.0, 0.01)
        base = sample_path(grid, 123, 0)
        assert not np.array_equal(base.values, sample_path(grid, 123, 1).values)
        assert not np.array_equal(base.values, sample_path(grid, 124, 0).values)

    def test_parallel_generation_matches_serial(self):
        # determinism must hold on any worker count / completion order
        grid = TimeGrid(1.0, 0.02)
        serial = [sample_path(grid, 5, i).values for i in range(32)]
        with ThreadPoolExecutor(max_workers=8) as pool:
            parallel = list(pool.map(lambda i: sample_path(grid, 5, i).values, range(32)))
        for a, b in zip(serial, parallel):
            assert np.array_equal(a, b)

    def test_terminal_mean_and_variance(self):
        # E W_T = 0 within 3 sqrt(T/M); Var W_T = T within 10%
        grid = TimeGrid(1.0, 0.01)
        m = 10_000
        finals = np.array([sample_path(grid, 77, i).values[-1] for i in range(m)])
        assert abs(finals.mean()) <= 3.0 / math.sqrt(m)
        assert 0.94 <= finals.var(ddof=1) <= 1.06

    def test_increment_distribution(self):
        grid = TimeGrid(1.0, 0.1)
        incs = np.concatenate(
            [sample_path(grid, 3, i).increments() for i in range(2000)]
        )
        assert abs(incs.mean()) < 3.0 * math.sqrt(0.1 / incs.size)
        assert abs(incs.var(ddof=1) - 0.1) < 0.005


class TestRefine:
    def test_pins_coarse_nodes_exactly(self):
        path = sample_path(TimeGrid(1.0, 0.25), 9, 0)
        fine = refine(path)
        assert fine.grid.dt == 0.125
        assert np.array_equal(fine.values[::2], path.values)

    def test_deterministic_and_fresh_randomness(self):
        path = sample_path(TimeGrid(1.0, 0.25), 9, 0)
        a, b = refine(path), refine(path)
        assert np.array_equal(a.values, b.values)
        assert a.stream.level == 1
        # refinement noise is not the level-0 stream of the finer grid
        direct = sample_path(TimeGrid(1.0, 0.125), 9, 0)
        assert not np.array_equal(a.values, direct.values)

    def test_midpoint_conditional_variance(self):
        # residual about the bridge mean has variance dt/4 = 0.025 for dt=0.1
        grid = TimeGrid(1.0, 0.1)
        residuals = []
        for i in range(4000):
            path = sample_path(grid, 21, i)
            fine = refine(path)
            mid = 0.5 * (path.values[:-1] + path.values[1:])
            residuals.append(fine.values[1::2] - mid)
        var = np.concatenate(residuals).var(ddof=1)
        assert 0.0235 <= var <= 0.0265

    def test_terminal_value_invariant_under_double_refinement(self):
        grid = TimeGrid(1.0, 0.25)
        for i in range(50):
            path = sample_path(grid, 4, i)
            twice = refine(refine(path))
            assert twice.values[-1] == path.values[-1]

    def test_refine_preserves_coarse_joint_moments(self):
        # Var W(1/2), Var W(1), Cov(W(1/2), W(1)) after refinement
        grid = TimeGrid(1.0, 0.5)
        m = 10_000
        half, full = np.empty(m), np.empty(m)
        for i in range(m):
            fine = refine(sample_path(grid, 13, i))
            half[i] = fine.values[fine.grid.index_of(0.5)]
            full[i] = fine.values[-1]
        assert abs(half.var(ddof=1) - 0.5) < 0.05
        assert abs(full.var(ddof=1) - 1.0) < 0.06
        cov = np.cov(half, full, ddof=1)[0, 1]
        assert abs(cov - 0.5) < 0.05


class TestRunningMax:
    def test_nonnegative(self):
        for i in range(20):
            assert running_max(sample_path(TimeGrid(1.0, 0.1), 2, i)) >= 0.0

    def test_mean_running_max_band(self):
        # E max ~ sqrt(2/pi) = 0.798 with a downward grid bias
        grid = TimeGrid(1.0, 2e-3)
        m = 4000
        vals = [running_max(sample_path(grid, 31, i)) for i in range(m)]
        assert 0.74 <= math.fsum(vals) / m <= 0.84


class TestPathEnsemble:
    def test_lazy_paths_are_deterministic(self):
        ens = PathEnsemble(TimeGrid(1.0, 0.1), 5, 17)
        assert len(ens) == 5
        assert np.array_equal(ens.path(3).values, ens.path(3).values)
        ids = [p.stream.replicate for p in ens]
        assert ids == [0, 1, 2, 3, 4]

    def test_replicate_out_of_range(self):
        ens = PathEnsemble(TimeGrid(1.0, 0.1), 2, 17)
        with pytest.raises(ConfigurationError):
            ens.path(2)

    def test_refined_ensemble_shares_base_randomness(self):
        ens = PathEnsemble(TimeGrid(1.0, 0.25), 3, 23)
        fine = ens.refined()
        assert fine.grid.dt == 0.125
        assert np.array_equal(fine.path(1).values[::2], ens.path(1).values)
