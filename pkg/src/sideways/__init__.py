"""Spectral solver and regularization toolkit for the sideways
time-fractional diffusion problem with a nonlinear source."""

from .kernel import (
    EXP_CLAMP,
    FractionalOrder,
    Symbol,
    caputo_monomial,
    cosh_propagator,
    sinh_ratio_propagator,
    symbol,
    symbol_values,
    tail_envelope_monotone,
)
from .regularization import (
    AprioriBound,
    RegPolicy,
    Rule,
    hp_error_bound,
    hp_rule_constants,
    hp_rule_epsilon,
    l2_error_bound,
    l2_rule_epsilon,
    truncate,
    weak_hp_epsilon_threshold,
    weak_hp_error_bound,
)
from .solver import (
    BoundaryPair,
    PicardConfig,
    PicardReport,
    SourceSpec,
    SpaceGrid,
    SpectralField,
    apply_mild_operator,
    contraction_bound,
    field_to_real,
    field_to_time,
    linear_spectral_field,
    march_frequency_ode,
    picard_solve,
    picard_solve_hat,
    source_hat_rows,
    spot_check_lipschitz,
)
from .spectral import (
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

__version__ = "0.1.0"

__all__ = [
    "AprioriBound",
    "BoundaryPair",
    "EXP_CLAMP",
    "FractionalOrder",
    "FrequencyGrid",
    "PicardConfig",
    "PicardReport",
    "RegPolicy",
    "Rule",
    "SourceSpec",
    "SpaceGrid",
    "SpectralField",
    "SpectralSignal",
    "Symbol",
    "TimeGrid",
    "TimeSignal",
    "apply_mild_operator",
    "caputo_monomial",
    "contraction_bound",
    "cosh_propagator",
    "dft_forward",
    "dft_inverse",
    "field_to_real",
    "field_to_time",
    "hp_error_bound",
    "hp_norm",
    "hp_rule_constants",
    "hp_rule_epsilon",
    "l2_error_bound",
    "l2_norm",
    "l2_rule_epsilon",
    "linear_spectral_field",
    "march_frequency_ode",
    "picard_solve",
    "picard_solve_hat",
    "sinh_ratio_propagator",
    "source_hat_rows",
    "spectral_l2_norm",
    "spot_check_lipschitz",
    "symbol",
    "symbol_values",
    "tail_envelope_monotone",
    "truncate",
    "weak_hp_epsilon_threshold",
    "weak_hp_error_bound",
]
