"""Spectral truncation, parameter-selection rules, and theoretical error bounds.

Truncation zeroes all frequency content with |w| > omega_max = 1/epsilon
before the solve; the selection rules tie epsilon to the noise level delta
so that noise amplification (growing like exp(x*eps^(-a/2)*cos(a*pi/4)))
and truncation bias (decaying like exp((x-1)*eps^(-a/2)*cos(a*pi/4)))
balance.  Three rules are provided:

  L2_RULE       epsilon = (cos(a*pi/4)/ln(1/delta))^(2/a); yields an L2
                error bound proportional to delta^(1-x).
  HP_RULE       epsilon = ((A+B)/ln(1/delta))^(2/(a+mu)) under an
                admissibility condition on delta; yields a Sobolev bound
                proportional to delta^(B/(A+B)).
  HP_WEAK_RULE  any epsilon below a closed-form threshold is admissible
                under a weaker a priori assumption.
  MANUAL        omega_max supplied directly (used to reproduce the
                benchmark tables, whose cutoffs follow no stated rule).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernel import FractionalOrder, tail_envelope_monotone
from .spectral import SpectralSignal


class Rule(enum.Enum):
    L2_RULE = "l2"
    HP_RULE = "hp"
    HP_WEAK_RULE = "hp_weak"
    MANUAL = "manual"


@dataclass(frozen=True)
class RegPolicy:
    """Noise level, cutoff scale, and the rule that produced them.

    epsilon is stored; omega_max = 1/epsilon is derived so the product is
    exactly one.
    """

    delta: float
    epsilon: float
    rule: Rule

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")

    @property
    def omega_max(self) -> float:
        return 1.0 / self.epsilon

    @classmethod
    def manual(cls, omega_max: float, delta: float = 0.0) -> "RegPolicy":
        if not omega_max > 0:
            raise ValueError("omega_max must be positive")
        return cls(delta=delta, epsilon=1.0 / omega_max, rule=Rule.MANUAL)

    @classmethod
    def l2(cls, delta: float, order: FractionalOrder) -> "RegPolicy":
        return cls(delta=delta, epsilon=l2_rule_epsilon(delta, order), rule=Rule.L2_RULE)


@dataclass(frozen=True)
class AprioriBound:
    """A priori energy bounds on the unknown exact solution.

    m1, m2, m3 bound the exponentially weighted spectral energies used by
    the L2, strong-Sobolev, and weak-Sobolev estimates respectively;
    gamma > 0 widens the weight, mu controls the strong-Sobolev exponent
    (mu > max(4-a, 4p-a) is required there), p is the Sobolev index, and
    k_lip is the source Lipschitz constant.
    """

    m1: float = 1.0
    m2: float = 1.0
    m3: float = 1.0
    gamma: float = 1.0
    mu: float = 4.0
    p: float = 0.0
    k_lip: float = 0.0

    def __post_init__(self) -> None:
        for name in ("m1", "m2", "m3", "gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.p < 0:
            raise ValueError("p must be nonnegative")
        if self.k_lip < 0:
            raise ValueError("k_lip must be nonnegative")


def truncate(spec: SpectralSignal, omega_max: float) -> SpectralSignal:
    """Zero every line with |w| > omega_max; surviving values are bit-identical."""
    if not omega_max > 0:
        raise ValueError("omega_max must be positive")
    keep = np.abs(spec.grid.points) <= omega_max
    return SpectralSignal(spec.grid, np.where(keep, spec.values, 0.0))


def l2_rule_epsilon(delta: float, order: FractionalOrder) -> float:
    """epsilon = (cos(a*pi/4)/ln(1/delta))^(2/a) for 0 < delta < 1."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return (order.cos_factor / math.log(1.0 / delta)) ** (2.0 / order.alpha)


def hp_rule_constants(bound: AprioriBound, order: FractionalOrder) -> tuple[float, float, float]:
    """(A, B, q) with A = p/2 + 1 + K^2 2^p, B = gamma cos(a*pi/4)/2, q = max(2, a/2, 2p)."""
    a = bound.p / 2.0 + 1.0 + bound.k_lip**2 * 2.0**bound.p
    b = 0.5 * bound.gamma * order.cos_factor
    q = max(2.0, order.alpha / 2.0, 2.0 * bound.p)
    return a, b, q


def hp_rule_epsilon(
    delta: float, bound: AprioriBound, order: FractionalOrder
) -> tuple[bool, float, Optional[str]]:
    """Admissibility of delta for the strong-Sobolev rule and the induced epsilon.

    Returns (ok, epsilon, reason): epsilon = ((A+B)/ln(1/delta))^(2/(a+mu))
    is always reported; ok is False with a reason when delta violates the
    admissibility condition (the rule value must stay below 1, below
    (B/A)^(1/(xi-q)) with xi = (a+mu)/2, and below the threshold that makes
    the truncated tail envelope monotone).
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not bound.mu > max(4.0 - order.alpha, 4.0 * bound.p - order.alpha):
        raise ValueError("mu must exceed max(4-alpha, 4p-alpha) for the strong rule")
    a_const, b_const, q = hp_rule_constants(bound, order)
    xi = 0.5 * (order.alpha + bound.mu)
    eps = ((a_const + b_const) / math.log(1.0 / delta)) ** (1.0 / xi)
    if eps >= 1.0:
        return False, eps, "rule value is not below 1"
    ratio_cap = (b_const / a_const) ** (1.0 / (xi - q))
    if eps >= ratio_cap:
        return False, eps, "rule value reaches the exponent-balance cap"
    if bound.p > 0 and not tail_envelope_monotone(eps, xi, bound.p, bound.gamma, order):
        return False, eps, "tail envelope is not monotone at this cutoff"
    return True, eps, None


def weak_hp_epsilon_threshold(bound: AprioriBound, order: FractionalOrder) -> float:
    """Strict upper bound [a*gamma*cos(a*pi/4)/(2p)]^(2/a) for admissible epsilon.

    p = 0 imposes no restriction; that case is signaled distinctly by
    returning math.inf.
    """
    if bound.p == 0:
        return math.inf
    base = order.alpha * bound.gamma * order.cos_factor / (2.0 * bound.p)
    return base ** (2.0 / order.alpha)


def l2_error_bound(
    x: float,
    delta: float,
    epsilon: float,
    order: FractionalOrder,
    m1: float = 1.0,
    k_lip: float = 1.0,
) -> float:
    """Two-term L2 error bound for the truncated solve at interior depth x.

        4 e^(K^2) exp(x eps^(-a/2) cos(a pi/4)) delta
        + 2 M1 e^(K^2) exp((x-1) eps^(-a/2) cos(a pi/4))

    With the L2 rule the two exponentials become delta^(-x) and delta^(1-x),
    so the bound collapses to C1 * delta^(1-x) with C1 = (4 + 2 M1) e^(K^2).
    """
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x must lie in [0, 1), got {x}")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    rate = epsilon ** (-order.alpha / 2.0) * order.cos_factor
    ek2 = math.exp(k_lip**2)
    return 4.0 * ek2 * math.exp(x * rate) * delta + 2.0 * m1 * ek2 * math.exp((x - 1.0) * rate)


def hp_error_bound(
    x: float, delta: float, bound: AprioriBound, order: FractionalOrder
) -> float:
    """Strong-Sobolev bound C2 * delta^(B/(A+B)) with C2 = 4 + 2 M2.

    delta must be admissible for the strong rule (checked via
    hp_rule_epsilon); the bound is uniform in x on [0, 1).
    """
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x must lie in [0, 1), got {x}")
    ok, _, reason = hp_rule_epsilon(delta, bound, order)
    if not ok:
        raise ValueError(f"delta is not admissible for the strong rule: {reason}")
    a_const, b_const, _ = hp_rule_constants(bound, order)
    c2 = 4.0 + 2.0 * bound.m2
    return c2 * delta ** (b_const / (a_const + b_const))


def weak_hp_error_bound(
    x: float,
    delta: float,
    epsilon: float,
    bound: AprioriBound,
    order: FractionalOrder,
) -> float:
    """Weak-Sobolev two-term bound at interior depth x.

        C3 (1+eps^-2)^p [ exp(x eps^(-a/2) cos) delta
                          + exp((x-gamma-1) eps^(-a/2) cos) ]

    with C3 = max(5 e^(K^2), 3 M3 (e^(K^2)+1)).  epsilon must lie strictly
    below the weak-rule threshold.
    """
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x must lie in [0, 1), got {x}")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if epsilon >= weak_hp_epsilon_threshold(bound, order):
        raise ValueError("epsilon is not admissible for the weak rule")
    rate = epsilon ** (-order.alpha / 2.0) * order.cos_factor
    ek2 = math.exp(bound.k_lip**2)
    c3 = max(5.0 * ek2, 3.0 * bound.m3 * (ek2 + 1.0))
    weight = (1.0 + epsilon**-2) ** bound.p
    return c3 * weight * (
        math.exp(x * rate) * delta + math.exp((x - bound.gamma - 1.0) * rate)
    )
