import math

import numpy as np
import pytest

from sideways import FractionalOrder, FrequencyGrid, SpaceGrid, symbol_values
from sideways.illposed import (
    AmplificationResult,
    SpectralMultiplierSource,
    amplification,
    banded_boundary_spectra,
    blowup_certificate,
    blowup_lower_bound,
    decaying_multiplier,
    scaled_source_hat,
)
from sideways.solver import SpectralField
from sideways.spectral import TimeGrid


class TestMultiplier:
    def test_dc_value_is_half(self):
        order = FractionalOrder(0.5)
        assert decaying_multiplier(order, np.array([0.0]))[0] == pytest.approx(0.5)

    def test_negative_frequencies_zeroed(self):
        order = FractionalOrder(0.5)
        vals = decaying_multiplier(order, np.array([-4.0, -0.5, 2.0]))
        assert vals[0] == 0.0 and vals[1] == 0.0 and vals[2] != 0.0

    def test_magnitude_decreasing(self):
        order = FractionalOrder(0.7)
        w = np.linspace(0.0, 50.0, 101)
        mags = np.abs(decaying_multiplier(order, w))
        assert np.all(np.diff(mags) <= 1e-15)
        assert np.all(mags <= 0.5)

    def test_zero_field_maps_to_zero(self):
        grid = TimeGrid(32, 2 * math.pi)
        field = SpectralField(SpaceGrid(4), grid.dual(), np.zeros((5, 32), dtype=complex))
        out = scaled_source_hat(field, FractionalOrder(0.5))
        assert np.all(out.values == 0)

    def test_multiplier_source_rows(self):
        src = SpectralMultiplierSource(multiplier=np.array([2.0, 0.0]), lipschitz_k=2.0)
        rows = src.hat_rows(np.array([[1.0 + 1j, 3.0], [2.0, 5.0]]), None, None, None)
        np.testing.assert_allclose(rows, [[2.0 + 2j, 0.0], [4.0, 0.0]])


class TestBandData:
    def test_eight_bins_on_reference_grid(self):
        # d_omega = 1/32 resolves [4, 4.25) with 8 bins
        grid = FrequencyGrid(512, 64 * math.pi)  # spacing 2pi/(64pi) = 1/32
        assert grid.spacing == pytest.approx(1.0 / 32.0)
        order = FractionalOrder(0.5)
        g_hat, h_hat = banded_boundary_spectra(4, grid, order)
        assert np.count_nonzero(h_hat.values) == 8
        norm_sq = float(np.sum(np.abs(h_hat.values) ** 2)) * grid.spacing
        assert norm_sq == pytest.approx(0.25, abs=grid.spacing)

    def test_g_magnitude_matches_symbol(self):
        grid = FrequencyGrid(512, 64 * math.pi)
        order = FractionalOrder(0.5)
        g_hat, _ = banded_boundary_spectra(4, grid, order)
        w = grid.points
        mask = g_hat.values != 0
        np.testing.assert_allclose(
            np.abs(g_hat.values[mask]), np.abs(w[mask]) ** (-order.alpha / 2.0), rtol=1e-12
        )

    def test_unresolved_band_rejected(self):
        grid = FrequencyGrid(64, 2 * math.pi)  # spacing 1: cannot resolve [4, 4.25)
        with pytest.raises(ValueError):
            banded_boundary_spectra(4, grid, FractionalOrder(0.5))

    def test_data_norms_vanish(self):
        # ||g_n|| + ||h_n|| <= 2/sqrt(n), up to 10% quantization slack
        order = FractionalOrder(0.9)
        for n in (1, 4, 16, 100, 1000):
            res = amplification(n, order, SpaceGrid(8))
            assert res.data_norm <= 2.0 / math.sqrt(n) * 1.1


class TestAmplification:
    def test_ratio_grows_and_spans_orders(self):
        order = FractionalOrder(0.9)
        ratios = [amplification(n, order, SpaceGrid(16)).ratio for n in (50, 200, 1000)]
        assert ratios[0] < ratios[1] < ratios[2]
        assert ratios[2] / ratios[0] >= 1e3

    def test_truncation_below_band_restores_zero(self):
        order = FractionalOrder(0.9)
        res = amplification(50, order, SpaceGrid(8), cutoff=16.0)
        assert res.sup_solution_norm == 0.0
        assert res.ratio == 0.0

    def test_no_saturation_at_desk_scale(self):
        res = amplification(1000, FractionalOrder(0.9), SpaceGrid(8))
        assert not res.saturated

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            amplification(0, FractionalOrder(0.5))
        with pytest.raises(ValueError):
            amplification(4, FractionalOrder(0.5), bins=2)

    def test_solver_meets_certified_lower_bound(self):
        # where the analytic certificate applies, the measured blow-up
        # must clear the (2/3) n floor
        order = FractionalOrder(0.9)
        n = 1000
        assert blowup_certificate(order, n)
        res = amplification(n, order, SpaceGrid(16))
        assert res.sup_solution_norm_sq >= blowup_lower_bound(n)


class TestCertificate:
    def test_lower_bound_value(self):
        assert blowup_lower_bound(9) == pytest.approx(6.0)

    def test_small_alpha_needs_astronomical_n(self):
        order = FractionalOrder(0.4)
        assert not blowup_certificate(order, 10**5)
        assert not blowup_certificate(order, 10**6)
        assert blowup_certificate(order, 10**8)

    def test_large_alpha_certified_at_desk_scale(self):
        order = FractionalOrder(0.9)
        assert blowup_certificate(order, 1000)
        assert not blowup_certificate(order, 10)
