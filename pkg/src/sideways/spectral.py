"""Uniform time/frequency grids and the scaled discrete Fourier transform.

The continuous transform pair used throughout the package is

    v^(w) = (2*pi)^(-1/2) * int v(t) exp(-i*w*t) dt
    v(t)  = (2*pi)^(-1/2) * int v^(w) exp(+i*w*t) dw

approximated on a uniform grid over [0, t_max) by a dt-scaled DFT with a
centered frequency layout (w_m = 2*pi*m/t_max for m = -N/2 .. N/2-1).
Signals are implicitly zero for t < 0, so the finite window stands in for
the half-line integral; the periodization error this introduces is
quantified in the test suite rather than hidden here.

With this scaling the pair is an exact inverse on the grid and Parseval's
identity holds exactly: dt*sum|v|^2 == dw*sum|v^|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform samples t_l = l*spacing, l = 0 .. n_samples-1, on [0, t_max).

    n_samples must be a power of two (>= 2) so transforms can use an FFT;
    the contract is only the defining DFT sum.
    """

    n_samples: int
    t_max: float

    def __post_init__(self) -> None:
        if self.n_samples < 2 or not _is_power_of_two(self.n_samples):
            raise ValueError(f"n_samples must be a power of two >= 2, got {self.n_samples}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")

    @property
    def spacing(self) -> float:
        return self.t_max / self.n_samples

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.spacing

    def dual(self) -> "FrequencyGrid":
        """Frequency grid this grid maps onto under the DFT."""
        return FrequencyGrid(self.n_samples, self.t_max)


@dataclass(frozen=True)
class FrequencyGrid:
    """Centered frequencies w_m = 2*pi*m/t_max, m = -N/2 .. N/2-1.

    Symmetric about 0 except for the single unpaired line at -N/2
    (the Nyquist bin).
    """

    n_samples: int
    t_max: float

    def __post_init__(self) -> None:
        if self.n_samples < 2 or not _is_power_of_two(self.n_samples):
            raise ValueError(f"n_samples must be a power of two >= 2, got {self.n_samples}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.t_max

    @property
    def points(self) -> np.ndarray:
        half = self.n_samples // 2
        return np.arange(-half, half) * self.spacing

    @property
    def nyquist(self) -> float:
        return (self.n_samples // 2) * self.spacing

    def dual(self) -> TimeGrid:
        return TimeGrid(self.n_samples, self.t_max)


@dataclass(frozen=True)
class TimeSignal:
    """Samples v(t_l) on a TimeGrid.  Values may be real or complex."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.n_samples,):
            raise ValueError(
                f"values must have shape ({self.grid.n_samples},), got {vals.shape}"
            )
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SpectralSignal:
    """Complex samples v^(w_m) on a FrequencyGrid."""

    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.grid.n_samples,):
            raise ValueError(
                f"values must have shape ({self.grid.n_samples},), got {vals.shape}"
            )
        object.__setattr__(self, "values", vals)


def forward_values(values: np.ndarray, dt: float) -> np.ndarray:
    """dt-scaled forward DFT onto the centered layout, applied to the last axis.

    Equals (2*pi)^(-1/2) * sum_l v(t_l) exp(-i*w_m*t_l) * dt for every
    centered frequency w_m.
    """
    return np.fft.fftshift(np.fft.fft(values, axis=-1), axes=-1) * (dt / SQRT_2PI)


def inverse_values(values: np.ndarray, dt: float) -> np.ndarray:
    """Inverse of :func:`forward_values` on the last axis (exact on the grid)."""
    return np.fft.ifft(np.fft.ifftshift(values, axes=-1), axis=-1) * (SQRT_2PI / dt)


def dft_forward(sig: TimeSignal) -> SpectralSignal:
    """Transform a time signal to its centered spectrum.

    Parameters
    ----------
    sig : TimeSignal
        Samples on [0, t_max); the signal is treated as zero for t < 0.

    Returns
    -------
    SpectralSignal
        v^(w_m) = (2*pi)^(-1/2) * sum_l v(t_l) exp(-i*w_m*t_l) * dt.
    """
    return SpectralSignal(sig.grid.dual(), forward_values(sig.values, sig.grid.spacing))


def dft_inverse(spec: SpectralSignal) -> TimeSignal:
    """Invert :func:`dft_forward`; the round trip is the identity on the grid."""
    grid = spec.grid.dual()
    return TimeSignal(grid, inverse_values(spec.values, grid.spacing))


def l2_norm(sig: TimeSignal) -> float:
    """Discrete L2 norm (sum |v|^2 * dt)^(1/2)."""
    v = np.asarray(sig.values)
    return math.sqrt(float(np.sum(np.abs(v) ** 2)) * sig.grid.spacing)


def spectral_l2_norm(spec: SpectralSignal) -> float:
    """Discrete L2 norm in the frequency domain; equals hp_norm(spec, 0)."""
    return math.sqrt(float(np.sum(np.abs(spec.values) ** 2)) * spec.grid.spacing)


def hp_norm(spec: SpectralSignal, p: float) -> float:
    """Sobolev-type norm (sum (1+w^2)^p |v^(w)|^2 * dw)^(1/2).

    p = 0 reduces to the spectral L2 norm.  Negative p is rejected.
    """
    if p < 0:
        raise ValueError(f"p must be nonnegative, got {p}")
    w = spec.grid.points
    weighted = (1.0 + w * w) ** p * np.abs(spec.values) ** 2
    return math.sqrt(float(np.sum(weighted)) * spec.grid.spacing)
