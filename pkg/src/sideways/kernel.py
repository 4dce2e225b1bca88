"""Fractional symbol, propagation kernels, and analytic Caputo derivatives.

The frequency symbol of the time-fractional derivative of order a in (0, 1)
is k(w) = (i*w)^(a/2), with

    Re k(w) = |w|^(a/2) * cos(a*pi/4)       (>= 0, nondecreasing in |w|)
    Im k(w) = |w|^(a/2) * sign(w) * sin(a*pi/4)

Re k drives the exponential growth cosh(k*x) that makes the sideways
reconstruction unstable.  Hyperbolic evaluations clamp the exponent's real
part at EXP_CLAMP (below double-precision overflow); regularized solves
never reach the clamp, but the instability demo intentionally probes
growth, so saturation can be queried via max_growth_exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma

# Largest magnitude allowed for the real part of an exponent before clamping.
EXP_CLAMP = 700.0

# Below this |k*lam| the sinh(k*lam)/k ratio switches to its Taylor series,
# keeping the removable singularity at k = 0 numerically smooth.  At the
# switch the truncated series is accurate to ~2e-16 relative while direct
# evaluation still avoids cancellation, so both branches sit at round-off.
_TAYLOR_SWITCH = 1e-2


@dataclass(frozen=True)
class FractionalOrder:
    """Order a of the fractional time derivative, restricted to 0 < a < 1."""

    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def quarter_angle(self) -> float:
        """a*pi/4, the argument of the symbol's phase."""
        return self.alpha * math.pi / 4.0

    @property
    def cos_factor(self) -> float:
        """cos(a*pi/4), the growth-rate coefficient of Re k."""
        return math.cos(self.quarter_angle)


@dataclass(frozen=True)
class Symbol:
    """Value of k(w) = (i*w)^(a/2) at a single frequency."""

    omega: float
    value: complex

    @property
    def real_part(self) -> float:
        return self.value.real

    @property
    def imag_part(self) -> float:
        return self.value.imag


def symbol_values(order: FractionalOrder, omega) -> np.ndarray:
    """k(w) for a scalar or array of frequencies (k(0) = 0)."""
    w = np.asarray(omega, dtype=np.float64)
    mag = np.abs(w) ** (order.alpha / 2.0)
    phase = math.cos(order.quarter_angle) + 1j * math.sin(order.quarter_angle)
    return mag * np.where(w >= 0, phase, np.conj(phase))


def symbol(order: FractionalOrder, omega: float) -> Symbol:
    """The fractional symbol at one frequency."""
    return Symbol(float(omega), complex(symbol_values(order, omega)))


def _exp_clamped(z: np.ndarray) -> np.ndarray:
    re = np.clip(np.real(z), -EXP_CLAMP, EXP_CLAMP)
    return np.exp(re + 1j * np.imag(z))


def cosh_clamped(z) -> np.ndarray:
    """cosh(z) with the exponent real part clamped at EXP_CLAMP."""
    z = np.asarray(z, dtype=np.complex128)
    return 0.5 * (_exp_clamped(z) + _exp_clamped(-z))


def sinh_ratio(k, lam) -> np.ndarray:
    """sinh(k*lam)/k with the removable singularity at k = 0 filled in.

    For |k*lam| below the Taylor switch the series
    lam * (1 + (k*lam)^2/6 + (k*lam)^4/120) is used, which is exact to
    double precision there and returns lam at k = 0.
    """
    k = np.asarray(k, dtype=np.complex128)
    lam = np.asarray(lam, dtype=np.float64)
    z = k * lam
    small = np.abs(z) < _TAYLOR_SWITCH
    z2 = z * z
    series = lam * (1.0 + z2 / 6.0 + z2 * z2 / 120.0)
    safe_k = np.where(small, 1.0, k)
    direct = (_exp_clamped(z) - _exp_clamped(-z)) / (2.0 * safe_k)
    return np.where(small, series, direct)


def cosh_propagator(order: FractionalOrder, omega, x: float) -> np.ndarray:
    """cosh(k(w)*x), the boundary-value propagation factor, for 0 <= x <= 1."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    return cosh_clamped(symbol_values(order, omega) * x)


def sinh_ratio_propagator(order: FractionalOrder, omega, lam: float) -> np.ndarray:
    """sinh(k(w)*lam)/k(w), the flux propagation factor, for lam >= 0."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    return sinh_ratio(symbol_values(order, omega), lam)


def max_growth_exponent(order: FractionalOrder, omega, scale: float = 1.0) -> float:
    """Largest Re(k(w))*scale over the given frequencies.

    Values at or above EXP_CLAMP mean clamped (saturated) hyperbolics.
    """
    k = symbol_values(order, omega)
    return float(np.max(np.real(k)) * scale)


def caputo_monomial(order: FractionalOrder, m: int, t) -> np.ndarray:
    """Caputo derivative of t^m: Gamma(m+1)/Gamma(m+1-a) * t^(m-a).

    m = 0 returns 0 (the Caputo derivative annihilates constants).
    As a -> 1 the classical derivative m*t^(m-1) is recovered.
    """
    if m < 0:
        raise ValueError(f"m must be a nonnegative integer, got {m}")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    if m == 0:
        return np.zeros_like(t)
    a = order.alpha
    coeff = _gamma(m + 1) / _gamma(m + 1 - a)
    return coeff * t ** (m - a)


def tail_envelope_monotone(
    epsilon: float, xi: float, p: float, gamma_weight: float, order: FractionalOrder
) -> bool:
    """Whether the cutoff 1/epsilon makes the tail weight a decreasing envelope.

    Returns True iff epsilon < [xi * gamma_weight * cos(a*pi/4) / p]^(1/xi)
    (strict).  When it holds, for every 0 <= x < 1 the map

        w -> (1+w^2)^p * exp(2*(x-1-gamma_weight) * w^xi * cos(a*pi/4))

    is nonincreasing on w >= 1/epsilon, so its supremum there is attained
    at w = 1/epsilon.  All arguments must be positive.
    """
    for name, val in (("epsilon", epsilon), ("xi", xi), ("p", p), ("gamma_weight", gamma_weight)):
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")
    threshold = (xi * gamma_weight * order.cos_factor / p) ** (1.0 / xi)
    return epsilon < threshold
