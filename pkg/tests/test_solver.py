import math

import numpy as np
import pytest

from sdelab import (
    BlowUpError,
    ConfigurationError,
    DomainError,
    HunterSaxtonParams,
    PathEnsemble,
    SolveConfig,
    SolverError,
    TimeGrid,
    attach_noise,
    euler_solve,
    expanding_fan_drift,
    hs_drift,
    hs_exact_characteristic,
    krylov_check,
    linear_noise,
    refine,
    sample_path,
    spike_drift,
    truncate_drift,
    verhulst_blowup_time,
    verhulst_exact,
    zero_drift,
)
from sdelab.coefficients import CoefficientSet


class TestSolveConfig:
    def test_only_euler(self):
        with pytest.raises(ConfigurationError):
            SolveConfig(0.0, scheme="milstein")

    def test_cap_must_exceed_initial(self):
        with pytest.raises(ConfigurationError):
            SolveConfig(2.0, cap=1.5)


class TestEulerSolve:
    def test_no_dynamics(self, unit_grid):
        path = sample_path(unit_grid, 1, 0)
        sol = euler_solve(zero_drift(), path, SolveConfig(1.5))
        assert np.all(sol.values == 1.5)
        assert sol.cap_index is None
        assert sol.path_id == 0

    def test_additive_noise_exact(self, unit_grid):
        path = sample_path(unit_grid, 2, 3)
        cs = attach_noise(zero_drift(), linear_noise(1.0, 0.0))
        sol = euler_solve(cs, path, SolveConfig(2.0))
        np.testing.assert_allclose(sol.values, 2.0 + path.values, atol=1e-12)

    def test_deterministic_inputs_deterministic_output(self, unit_grid):
        path = sample_path(unit_grid, 5, 7)
        cs = attach_noise(spike_drift(), linear_noise(0.1, 0.2))
        a = euler_solve(cs, path, SolveConfig(0.5))
        b = euler_solve(cs, path, SolveConfig(0.5))
        assert np.array_equal(a.values, b.values)

    def test_cap_freezes_tail(self):
        grid = TimeGrid(1.0, 0.01)
        path = sample_path(grid, 3, 1)
        runaway = CoefficientSet(name="runaway", drift=lambda t, x: 1000.0)
        sol = euler_solve(runaway, path, SolveConfig(0.0, cap=25.0))
        k = sol.cap_index
        assert k is not None
        assert abs(sol.values[k]) > 25.0
        assert np.all(np.abs(sol.values[:k]) <= 25.0)
        assert np.all(sol.values[k:] == sol.values[k])

    def test_nonfinite_coefficient_reported_with_location(self, unit_grid):
        path = sample_path(unit_grid, 4, 9)

        def bad_drift(t, x):
            return math.inf if t > 0.5 else 0.0

        cs = CoefficientSet(name="bad", drift=bad_drift)
        with pytest.raises(SolverError) as err:
            euler_solve(cs, path, SolveConfig(0.0))
        assert err.value.t == pytest.approx(0.501)
        assert err.value.path_id == 9
        assert math.isfinite(err.value.x)


class TestExactCharacteristic:
    def test_identity_at_time_zero(self, zero_path):
        params = HunterSaxtonParams(0.0, 0.5, zero_path)
        assert hs_exact_characteristic(params, zero_path, 0.4, 0.0) == 0.4

    def test_deterministic_square_decay(self, zero_path):
        params = HunterSaxtonParams(0.0, 0.5, zero_path)
        for t in (0.1, 0.5, 0.9):
            assert hs_exact_characteristic(params, zero_path, 0.5, t) == pytest.approx(
                0.5 * (1.0 - t) ** 2, rel=1e-4
            )

    def test_collapse_toward_blowup(self, zero_path):
        params = HunterSaxtonParams(0.0, 0.5, zero_path)
        t_last = 1.0 - zero_path.grid.dt
        for x in (0.1, 0.5, 0.9):
            assert hs_exact_characteristic(params, zero_path, x, t_last) < 1e-5

    def test_domain_errors(self, zero_path):
        params = HunterSaxtonParams(0.0, 0.5, zero_path)
        with pytest.raises(DomainError):
            hs_exact_characteristic(params, zero_path, 1.0, 0.5)
        with pytest.raises(DomainError):
            hs_exact_characteristic(params, zero_path, 0.5, 1.0)  # at blow-up

    def test_euler_tracks_characteristic(self):
        # strong error shrinks by ~sqrt(2) per dt halving under the same noise
        grid = TimeGrid(1.0, 1e-3)
        m = 100
        err = {0: [], 1: []}
        for i in range(m):
            path = sample_path(grid, 60, i)
            for level in (0, 1):
                if level == 1:
                    path = refine(path)
                params = HunterSaxtonParams(0.5, 0.5, path)
                cs = attach_noise(hs_drift(params, path), linear_noise(0.0, 0.5))
                k_w = params.horizon_index(0.9)
                sol = euler_solve(cs, path, SolveConfig(0.5))
                gap = np.abs(
                    sol.values[: k_w + 1] - 0.5 * params.ramp_edge[: k_w + 1]
                )
                err[level].append(float(gap.max()))
        e0, e1 = np.mean(err[0]), np.mean(err[1])
        assert e0 < 0.02
        assert 1.2 <= e0 / e1 <= 3.0


class TestVerhulst:
    def test_initial_value(self, zero_path):
        assert verhulst_exact(-2.0, 0.0, zero_path, 0.0) == pytest.approx(-2.0)
        assert verhulst_exact(3.0, 0.0, zero_path, 0.0) == pytest.approx(3.0)

    def test_negative_data_closed_form(self, zero_path):
        for t in (0.1, 0.5, 0.9):
            assert verhulst_exact(-2.0, 0.0, zero_path, t) == pytest.approx(
                1.0 / (t / 2.0 - 0.5), abs=1e-12
            )

    def test_blowup_detected_and_carried(self, zero_path):
        assert verhulst_blowup_time(-2.0, 0.0, zero_path) == pytest.approx(1.0)
        with pytest.raises(BlowUpError) as err:
            verhulst_exact(-2.0, 0.0, zero_path, 1.0)
        assert err.value.crossing_time == pytest.approx(1.0)

    def test_positive_data_decays_without_blowup(self, zero_path):
        assert verhulst_blowup_time(2.0, 0.0, zero_path) is None
        vals = [verhulst_exact(2.0, 0.0, zero_path, t) for t in (0.0, 0.3, 0.6, 0.9)]
        assert all(v > 0.0 for v in vals)
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[2] == pytest.approx(1.0 / (0.5 + 0.3), abs=1e-12)

    def test_zero_initial_gradient_rejected(self, zero_path):
        with pytest.raises(ConfigurationError):
            verhulst_exact(0.0, 0.0, zero_path, 0.5)

    def test_stochastic_solution_positive_data_stays_finite(self):
        grid = TimeGrid(1.0, 1e-3)
        path = sample_path(grid, 12, 0)
        vals = [verhulst_exact(1.0, 0.5, path, t) for t in np.arange(0.0, 1.0, 0.1)]
        assert all(math.isfinite(v) for v in vals)


class TestKrylovCheck:
    def test_truncated_spike_within_lemma_bound(self):
        ens = PathEnsemble(TimeGrid(1.0, 1e-3), 1, 5)
        noise = linear_noise(1.0, 0.5)
        cs = attach_noise(truncate_drift(spike_drift(), 4.0), noise)
        report = krylov_check(cs, ens, box_half_width=2.0, pair_samples=256, seed=1)
        bound = 2.0 * 4.0 + noise.lipschitz_constant + noise.lipschitz_constant**2
        assert all(val <= bound for _lo, _hi, val in report.monotonicity)
        assert math.isfinite(report.boundedness_integral)
        assert math.isfinite(report.coercivity)

    def test_zero_drift_unit_noise_vanishes(self):
        ens = PathEnsemble(TimeGrid(1.0, 1e-2), 1, 5)
        cs = attach_noise(zero_drift(), linear_noise(1.0, 0.0))
        report = krylov_check(cs, ens, 2.0, pair_samples=64, seed=2)
        assert all(abs(val) <= 1e-12 for _lo, _hi, val in report.monotonicity)

    def test_expanding_fan_diverges_in_earliest_bucket(self):
        # positive-gradient mirror drift: monotonicity constant ~ 2K(t) ~ 4/t
        grid = TimeGrid(1.0, 1e-3)
        ens = PathEnsemble(grid, 1, 5)
        report = krylov_check(
            lambda path: expanding_fan_drift(path, L=0.0),
            ens,
            box_half_width=2.0,
            pair_samples=256,
            seed=3,
        )
        assert report.monotonicity[0][2] > 2.0 / grid.dt

    def test_bad_probe_box_rejected(self):
        ens = PathEnsemble(TimeGrid(1.0, 0.1), 1, 5)
        with pytest.raises(ConfigurationError):
            krylov_check(zero_drift(), ens, box_half_width=0.0)
