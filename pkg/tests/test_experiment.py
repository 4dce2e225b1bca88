import io
import math

import numpy as np
import pytest

from sideways import FractionalOrder, SpaceGrid, TimeGrid, caputo_monomial
from sideways.experiment import (
    BENCHMARK_ERRORS,
    TABLE_OMEGA_MAX,
    TABLE_X_POINTS,
    ExperimentConfig,
    amplitude_for_measured_delta,
    boundary_data,
    exact_solution,
    fit_convergence_rates,
    inject_noise,
    manufactured_forcing,
    manufactured_source,
    noiseless_errors,
    rate_benchmark,
    relative_error,
    run_error_table,
    sweep_noise_amplitude,
    symbol_fractional_samples,
    table_source,
    theoretical_bound_slope,
    x_index,
)
from sideways.solver import spot_check_lipschitz


class TestExactSolution:
    def test_boundary_value(self):
        t = np.linspace(0, 2 * math.pi, 33)
        np.testing.assert_allclose(exact_solution(0.0, t), t**2)

    def test_boundary_flux(self):
        # d/dx of e^(-2x) t^2 at x = 0 is -2 t^2
        t = np.linspace(0, 2 * math.pi, 33)
        eps = 1e-7
        flux = (exact_solution(eps, t) - exact_solution(0.0, t)) / eps
        np.testing.assert_allclose(flux, -2.0 * t**2, rtol=1e-6)

    def test_initial_condition(self):
        x = np.linspace(0, 1, 11)
        np.testing.assert_allclose(exact_solution(x, 0.0), 0.0)

    def test_boundary_data_samples(self):
        grid = TimeGrid(64, 2 * math.pi)
        data = boundary_data(grid)
        np.testing.assert_allclose(data.g.values, grid.points**2)
        np.testing.assert_allclose(data.h.values, -2.0 * grid.points**2)


class TestManufacturedSource:
    def test_nonlinear_cancellation(self):
        # at the exact solution the rational terms cancel and the source
        # equals the fractional time derivative minus the depth diffusion
        order = FractionalOrder(0.4)
        src = manufactured_source(order)
        x = np.linspace(0.0, 1.0, 9)
        t = np.linspace(0.0, 2 * math.pi, 65)
        for xi in x:
            u = exact_solution(xi, t)
            f = src.eval(float(xi), t, u)
            lhs = math.exp(-2 * xi) * caputo_monomial(order, 2, t) - 4.0 * math.exp(-2 * xi) * t**2
            np.testing.assert_allclose(f, lhs, atol=1e-10)

    def test_zero_state_zero_time(self):
        order = FractionalOrder(0.5)
        src = manufactured_source(order)
        assert src.eval(0.3, np.array([0.0]), np.array([0.0]))[0] == pytest.approx(0.0)

    def test_lipschitz_spot_check(self):
        src = manufactured_source(FractionalOrder(0.4))
        assert spot_check_lipschitz(src, samples=10_000, seed=1) <= 1.0 + 1e-9

    def test_forcing_matches_components(self):
        order = FractionalOrder(0.7)
        x, t = 0.4, np.linspace(0.1, 6.0, 17)
        expected = math.exp(-2 * x) * (
            caputo_monomial(order, 2, t) - t**2 / (1 + math.exp(-4 * x) * t**4) - 4 * t**2
        )
        np.testing.assert_allclose(manufactured_forcing(order, x, t), expected, rtol=1e-13)

    def test_spectral_forcing_tracks_analytic_scale(self):
        # the symbol-built fractional derivative lives on the same scale as
        # the analytic one; they genuinely differ by the periodization
        # mismatch of the growing t^2 window, which is what separates the
        # "spectral" and "analytic" forcing modes
        order = FractionalOrder(0.4)
        grid = TimeGrid(512, 2 * math.pi)
        sym = symbol_fractional_samples(grid, order)
        ana = caputo_monomial(order, 2, grid.points)
        interior = slice(64, 448)
        scale = float(np.max(np.abs(ana)))
        rel = np.sqrt(np.mean((sym[interior] - ana[interior]) ** 2)) / scale
        assert 0.0 < rel < 0.5


class TestNoise:
    def test_zero_amplitude_identity(self):
        grid = TimeGrid(64, 2 * math.pi)
        data = boundary_data(grid)
        noisy, measured = inject_noise(data, 0.0, seed=1)
        assert measured == 0.0
        assert noisy is data

    def test_fixed_seed_bit_identical(self):
        grid = TimeGrid(64, 2 * math.pi)
        data = boundary_data(grid)
        a, ma = inject_noise(data, 0.05, seed=42, stream=(3, 1))
        b, mb = inject_noise(data, 0.05, seed=42, stream=(3, 1))
        assert ma == mb
        assert np.array_equal(a.g.values, b.g.values)
        assert np.array_equal(a.h.values, b.h.values)

    def test_streams_independent(self):
        grid = TimeGrid(64, 2 * math.pi)
        data = boundary_data(grid)
        a, _ = inject_noise(data, 0.05, seed=42, stream=(0, 0))
        b, _ = inject_noise(data, 0.05, seed=42, stream=(0, 1))
        assert not np.array_equal(a.g.values, b.g.values)

    def test_measured_level_scales_linearly(self):
        grid = TimeGrid(512, 2 * math.pi)
        data = boundary_data(grid)
        means = []
        for amp in (0.01, 0.02, 0.04):
            vals = [inject_noise(data, amp, seed=s)[1] for s in range(100)]
            means.append(np.mean(vals))
        assert means[1] / means[0] == pytest.approx(2.0, rel=0.1)
        assert means[2] / means[1] == pytest.approx(2.0, rel=0.1)

    def test_amplitude_calibration(self):
        grid = TimeGrid(512, 2 * math.pi)
        data = boundary_data(grid)
        amp = amplitude_for_measured_delta(0.05, data)
        measured = np.mean([inject_noise(data, amp, seed=s)[1] for s in range(50)])
        assert measured == pytest.approx(0.05, rel=0.1)


class TestRelativeError:
    def test_identical_grids(self):
        grid = np.random.default_rng(0).standard_normal((5, 16))
        assert relative_error(grid, grid, 2) == 0.0

    def test_zero_reconstruction_gives_one(self):
        grid = np.random.default_rng(1).standard_normal((5, 16))
        assert relative_error(grid, np.zeros_like(grid), 3) == pytest.approx(1.0)

    def test_zero_row_rejected(self):
        grid = np.zeros((3, 8))
        with pytest.raises(ValueError):
            relative_error(grid, grid, 1)

    def test_x_index_mapping(self):
        space = SpaceGrid(40)
        assert x_index(space, 0.15) == 6
        assert x_index(space, 0.95) == 38
        with pytest.raises(ValueError):
            x_index(space, 0.17)


class TestConfig:
    def test_defaults_valid(self):
        cfg = ExperimentConfig()
        assert cfg.omega_max == TABLE_OMEGA_MAX
        assert cfg.x_points == TABLE_X_POINTS

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"alpha": 1.2},
            {"n_samples": 100},
            {"repetitions": 0},
            {"noise_amplitude": -0.1},
            {"forcing": "exotic"},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ExperimentConfig(**kwargs)


def small_config(**overrides):
    defaults = dict(
        alpha=0.4,
        n_samples=128,
        n_x=20,
        omega_max=(8.0, 12.0),
        x_points=(0.15, 0.5, 0.95),
        repetitions=3,
        noise_amplitude=0.05,
        seed=99,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


class TestErrorTable:
    def test_shape_and_determinism(self):
        cfg = small_config()
        t1 = run_error_table(cfg)
        t2 = run_error_table(cfg)
        assert t1.mean.shape == (3, 2)
        assert np.array_equal(t1.mean, t2.mean)
        assert np.array_equal(t1.std, t2.std)

    def test_thread_count_does_not_change_results(self):
        cfg = small_config()
        t1 = run_error_table(cfg, threads=1)
        t2 = run_error_table(cfg, threads=4)
        assert np.array_equal(t1.mean, t2.mean)

    def test_csv_format(self):
        cfg = small_config(repetitions=1)
        table = run_error_table(cfg)
        buf = io.StringIO()
        table.write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "x,omega_max,alpha,mean_error,std_error,n_reps,seed"
        assert len(lines) == 1 + 3 * 2
        first = lines[1].split(",")
        assert first[0] == "0.15"
        assert first[6] == "99"

    def test_failed_cells_marked_invalid(self):
        cfg = small_config(max_iter=1, repetitions=1)
        table = run_error_table(cfg)
        assert np.all(np.isnan(table.mean))
        assert np.all(table.n_valid == 0)

    def test_noiseless_floor_below_reference(self):
        # discretization floor at the largest published cutoff sits well
        # below the reference cells it supports
        cfg = ExperimentConfig(alpha=0.4)
        floors = noiseless_errors(cfg, 31.8755)
        assert np.all(floors < BENCHMARK_ERRORS[0.4][:, 3] * 2.0)
        assert floors[0] < 0.15

    def test_sweep_sorted_by_score(self):
        cfg = small_config(
            alpha=0.4,
            n_samples=512,
            n_x=40,
            omega_max=TABLE_OMEGA_MAX,
            x_points=TABLE_X_POINTS,
            repetitions=1,
        )
        entries = sweep_noise_amplitude(cfg, (0.05, 0.15))
        assert len(entries) == 2
        assert entries[0].score <= entries[1].score


class TestRates:
    def test_theoretical_bound_slope_identity(self):
        order = FractionalOrder(0.4)
        deltas = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
        for x in (0.0, 0.15, 0.5, 0.75):
            slope = theoretical_bound_slope(x, deltas, order)
            assert slope == pytest.approx(1.0 - x, abs=1e-10)

    def test_preconditions(self):
        cfg = ExperimentConfig()
        with pytest.raises(ValueError):
            fit_convergence_rates(cfg, delta_targets=(1e-1, 1e-2))
        with pytest.raises(ValueError):
            fit_convergence_rates(cfg, delta_targets=(1e-1, 0.5e-1, 0.3e-1))

    def test_rate_benchmark_consistency(self):
        # the band-limited problem's data and exact field agree at x = 0
        cfg = ExperimentConfig(alpha=0.9, n_samples=256)
        data, src, exact_grid = rate_benchmark(cfg)
        np.testing.assert_allclose(exact_grid[0], data.g.values)
        assert spot_check_lipschitz(src, samples=2000, seed=3) <= 1.0 + 1e-9

    def test_small_rate_fit_runs(self):
        cfg = ExperimentConfig(alpha=0.9, n_samples=256, n_x=20, repetitions=2)
        fits = fit_convergence_rates(cfg, x_list=(0.5,), delta_targets=(1e-1, 1e-2, 1e-3))
        assert len(fits) == 1
        assert not fits[0].degenerate
        assert fits[0].n_points == 6


class TestTableSource:
    def test_lipschitz(self):
        src = table_source(FractionalOrder(0.7), TimeGrid(128, 2 * math.pi))
        assert spot_check_lipschitz(src, samples=2000, seed=5) <= 1.0 + 1e-9
