import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sideways import (
    FrequencyGrid,
    SpectralSignal,
    TimeGrid,
    TimeSignal,
    dft_forward,
    dft_inverse,
    hp_norm,
    l2_norm,
    spectral_l2_norm,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)


def brute_force_dft(sig: TimeSignal) -> np.ndarray:
    """O(N^2) evaluation of the defining sum; the oracle for the FFT path."""
    t = sig.grid.points
    w = sig.grid.dual().points
    phases = np.exp(-1j * np.outer(w, t))
    return phases @ np.asarray(sig.values, dtype=complex) * sig.grid.spacing / SQRT_2PI


def random_signal(n, t_max=2 * math.pi, seed=0, complex_values=True):
    rng = np.random.default_rng(seed)
    grid = TimeGrid(n, t_max)
    vals = rng.standard_normal(n)
    if complex_values:
        vals = vals + 1j * rng.standard_normal(n)
    return TimeSignal(grid, vals)


class TestGrids:
    def test_time_grid_points(self):
        g = TimeGrid(8, 4.0)
        assert g.spacing == 0.5
        np.testing.assert_allclose(g.points, np.arange(8) * 0.5)

    @pytest.mark.parametrize("n", [0, 1, 3, 6, 100])
    def test_non_power_of_two_rejected(self, n):
        with pytest.raises(ValueError):
            TimeGrid(n, 1.0)

    def test_frequency_layout_centered(self):
        f = FrequencyGrid(8, 2 * math.pi)
        np.testing.assert_allclose(f.points, np.arange(-4, 4, dtype=float))
        # symmetric about zero except the single unpaired line at -N/2
        w = f.points
        for om in w:
            if om != w[0]:
                assert -om in w

    def test_dual_round_trip(self):
        g = TimeGrid(16, 3.0)
        assert g.dual().dual() == g


class TestForward:
    def test_zero_signal(self):
        sig = TimeSignal(TimeGrid(16, 1.0), np.zeros(16))
        assert np.all(dft_forward(sig).values == 0)

    def test_unit_impulse_constant_spectrum(self):
        grid = TimeGrid(8, 2 * math.pi)
        vals = np.zeros(8)
        vals[0] = 1.0
        spec = dft_forward(TimeSignal(grid, vals))
        np.testing.assert_allclose(spec.values, grid.spacing / SQRT_2PI, rtol=1e-14)

    def test_matches_brute_force_n64(self):
        sig = random_signal(64, seed=3)
        spec = dft_forward(sig)
        oracle = brute_force_dft(sig)
        err = np.max(np.abs(spec.values - oracle)) / np.max(np.abs(oracle))
        assert err < 1e-12


class TestInverse:
    def test_zero_spectrum(self):
        spec = SpectralSignal(FrequencyGrid(16, 1.0), np.zeros(16))
        assert np.all(dft_inverse(spec).values == 0)

    def test_impulse_round_trip(self):
        grid = TimeGrid(8, 2 * math.pi)
        vals = np.zeros(8)
        vals[0] = 1.0
        back = dft_inverse(dft_forward(TimeSignal(grid, vals)))
        np.testing.assert_allclose(back.values.real, vals, atol=1e-15)

    @pytest.mark.parametrize("n", [64, 256, 1024, 4096])
    def test_round_trip_random(self, n):
        sig = random_signal(n, seed=n)
        back = dft_inverse(dft_forward(sig))
        err = np.max(np.abs(back.values - sig.values)) / np.max(np.abs(sig.values))
        assert err < 1e-12


class TestNorms:
    def test_zero_norm(self):
        assert l2_norm(TimeSignal(TimeGrid(8, 1.0), np.zeros(8))) == 0.0

    def test_constant_one_norm(self):
        # integral of 1 over [0, 2*pi) is 2*pi, norm sqrt(2*pi)
        sig = TimeSignal(TimeGrid(512, 2 * math.pi), np.ones(512))
        assert l2_norm(sig) == pytest.approx(SQRT_2PI, rel=1e-14)

    def test_parseval(self):
        sig = random_signal(128, seed=11)
        assert l2_norm(sig) == pytest.approx(spectral_l2_norm(dft_forward(sig)), rel=1e-12)

    def test_hp_zero_order_is_l2(self):
        spec = dft_forward(random_signal(64, seed=5))
        assert hp_norm(spec, 0.0) == pytest.approx(spectral_l2_norm(spec), rel=1e-14)

    def test_hp_zero_spectrum(self):
        spec = SpectralSignal(FrequencyGrid(32, 2 * math.pi), np.zeros(32))
        assert hp_norm(spec, 2.5) == 0.0

    def test_hp_single_line(self):
        # one line of amplitude a at w = 1 with p = 1 gives a*sqrt(2*dw)
        grid = FrequencyGrid(16, 2 * math.pi)
        vals = np.zeros(16, dtype=complex)
        vals[np.argmin(np.abs(grid.points - 1.0))] = 0.7
        expected = 0.7 * math.sqrt(2.0 * grid.spacing)
        assert hp_norm(SpectralSignal(grid, vals), 1.0) == pytest.approx(expected, rel=1e-14)

    def test_hp_negative_order_rejected(self):
        spec = dft_forward(random_signal(16, seed=1))
        with pytest.raises(ValueError):
            hp_norm(spec, -0.1)

    @given(
        p_low=st.floats(min_value=0.0, max_value=3.0),
        p_step=st.floats(min_value=0.0, max_value=3.0),
        seed=st.integers(min_value=0, max_value=2**30),
    )
    @settings(max_examples=50, deadline=None)
    def test_hp_monotone_in_order(self, p_low, p_step, seed):
        spec = dft_forward(random_signal(32, seed=seed))
        assert hp_norm(spec, p_low + p_step) >= hp_norm(spec, p_low) - 1e-12
