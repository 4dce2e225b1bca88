"""Mild-solution operator and Picard fixed-point solver.

Per frequency w, the reconstruction into the interior satisfies the
Volterra integral equation in x

    u^(x,w) = cosh(k(w)*x) g^(w) + sinh(k(w)*x)/k(w) h^(w)
              - int_0^x sinh(k(w)*(x-z))/k(w) f^(z,w,u(z,.)) dz

where g, h are the boundary value and boundary flux at x = 0 and f is the
(possibly nonlinear) source.  The solver discretizes x on a uniform grid,
evaluates the z-integral with a fixed-weight quadrature that uses only
nodes z <= x (causality), and iterates w_{n+1} = Phi(w_n) from w_0 = 0.
The iteration converges for any Lipschitz source because the m-fold
composition of Phi is a contraction (the repeated z-integration produces a
1/m! factor that eventually beats any exponential growth rate).

Pointwise sources f(x, t, u) are evaluated in the time domain: each x row
of the iterate is inverse transformed, f applied sample by sample, and the
result transformed back.  Spectral sources (used by the instability demo)
supply their own `hat_rows` hook instead.

`march_frequency_ode` is an independent cross-check: it integrates the
per-frequency second-order ODE u'' = (i*w)^a u - f^ with a classical RK4
marcher on a much finer x step, and is used by the test suite to validate
the Volterra quadrature end to end.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .kernel import (
    EXP_CLAMP,
    FractionalOrder,
    cosh_clamped,
    sinh_ratio,
    symbol_values,
)
from .spectral import (
    FrequencyGrid,
    SpectralSignal,
    TimeGrid,
    TimeSignal,
    dft_forward,
    forward_values,
    inverse_values,
)


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform nodes x_j = j/n_x, j = 0 .. n_x, spanning [0, 1]."""

    n_x: int

    def __post_init__(self) -> None:
        if self.n_x < 1:
            raise ValueError(f"n_x must be positive, got {self.n_x}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_x

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n_x + 1) / self.n_x


@dataclass(frozen=True)
class SourceSpec:
    """A pointwise source f(x, t, u) with a declared Lipschitz constant in u.

    The constant is declared, not proven; `spot_check_lipschitz` samples the
    bound.  `eval` must accept (x: float, t: ndarray, u: ndarray) and return
    a real array shaped like t.
    """

    eval: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    lipschitz_k: float

    def __post_init__(self) -> None:
        if self.lipschitz_k < 0:
            raise ValueError("lipschitz_k must be nonnegative")

    def hat_rows(self, field_values, space, time_grid, omegas):
        if time_grid is None:
            raise ValueError("pointwise sources require the full time grid")
        if field_values.shape[1] != time_grid.n_samples:
            raise ValueError("frequency layout does not match the time grid")
        t = time_grid.points
        u_time = inverse_values(field_values, time_grid.spacing)
        f_time = np.empty((field_values.shape[0], time_grid.n_samples))
        for j, x in enumerate(space.points):
            f_time[j] = self.eval(float(x), t, u_time[j].real)
        return forward_values(f_time, time_grid.spacing)


def spot_check_lipschitz(
    src: SourceSpec,
    samples: int = 10_000,
    seed: int = 0,
    t_max: float = 2.0 * math.pi,
    u_scale: float = 50.0,
) -> float:
    """Largest |f(x,t,a)-f(x,t,b)|/|a-b| found over random triples."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, samples)
    t = rng.uniform(0.0, t_max, samples)
    a = rng.uniform(-u_scale, u_scale, samples)
    b = rng.uniform(-u_scale, u_scale, samples)
    worst = 0.0
    for i in range(samples):
        da = abs(a[i] - b[i])
        if da == 0.0:
            continue
        ti = np.array([t[i]])
        fa = float(src.eval(float(x[i]), ti, np.array([a[i]]))[0])
        fb = float(src.eval(float(x[i]), ti, np.array([b[i]]))[0])
        worst = max(worst, abs(fa - fb) / da)
    return worst


@dataclass(frozen=True)
class BoundaryPair:
    """Boundary value g = u(0, .) and boundary flux h = u_x(0, .) on one grid."""

    g: TimeSignal
    h: TimeSignal

    def __post_init__(self) -> None:
        if self.g.grid != self.h.grid:
            raise ValueError("g and h must share the same time grid")

    @property
    def grid(self) -> TimeGrid:
        return self.g.grid


@dataclass(frozen=True)
class SpectralField:
    """Complex field u^(x_j, w_l) over a space grid and a frequency grid."""

    space: SpaceGrid
    freq: FrequencyGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.complex128)
        expected = (self.space.n_x + 1, self.freq.n_samples)
        if vals.shape != expected:
            raise ValueError(f"values must have shape {expected}, got {vals.shape}")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class PicardConfig:
    """Stopping rule for the fixed-point iteration.

    tol bounds the sup-over-x L2 increment between successive iterates;
    max_iter counts operator applications.
    """

    tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class PicardReport:
    """Per-iteration increment norms and convergence diagnostics."""

    converged: bool
    n_iter: int
    increments: np.ndarray
    tol: float
    growth_flagged_at: Optional[int] = None
    max_exponent: float = 0.0
    saturated: bool = False

    def summary(self) -> str:
        state = "converged" if self.converged else "NOT converged"
        lines = [
            f"picard {state} after {self.n_iter} iterations (tol={self.tol:g})",
        ]
        if self.growth_flagged_at is not None:
            lines.append(
                f"  increments grew for 3 consecutive iterations starting at {self.growth_flagged_at}"
            )
        if self.saturated:
            lines.append("  WARNING: hyperbolic exponent clamp engaged")
        for i, inc in enumerate(self.increments, start=1):
            lines.append(f"  iter {i:3d}  increment {inc:.6e}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Volterra quadrature
# ---------------------------------------------------------------------------

# Fixed-weight rules (per unit step) used to integrate from node 0 to node j
# using only nodes 0..j.  Rows j >= 2 are exact for cubics; j = 1 falls back
# to the trapezoid (its single interval contributes O(dx^3) locally, below
# the sup-norm tolerance of the ODE cross-check).
_W_END = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0])


def volterra_weights(n_x: int, quadrature: str = "order4") -> np.ndarray:
    """Lower-triangular weight matrix W with int_0^{x_j} g dz ~ dx*sum_i W[j,i]*g_i.

    quadrature "order4" combines Simpson-type starters with an end-corrected
    trapezoid; "trap" is the plain composite trapezoid (second order), kept
    for error-budget comparisons.
    """
    w = np.zeros((n_x + 1, n_x + 1))
    if quadrature == "trap":
        for j in range(1, n_x + 1):
            w[j, : j + 1] = 1.0
            w[j, 0] = 0.5
            w[j, j] = 0.5
        return w
    if quadrature != "order4":
        raise ValueError(f"unknown quadrature {quadrature!r}")
    rules = {
        1: [0.5, 0.5],
        2: [1 / 3, 4 / 3, 1 / 3],
        3: [3 / 8, 9 / 8, 9 / 8, 3 / 8],
        4: [1 / 3, 4 / 3, 2 / 3, 4 / 3, 1 / 3],
        5: [1 / 3, 4 / 3, 1 / 3 + 3 / 8, 9 / 8, 9 / 8, 3 / 8],
    }
    for j in range(1, n_x + 1):
        if j in rules:
            w[j, : j + 1] = rules[j]
        else:
            w[j, : j + 1] = 1.0
            w[j, :3] = _W_END
            w[j, j - 2 : j + 1] = _W_END[::-1]
    return w


class _OperatorContext:
    """Precomputed pieces of the mild-solution operator on fixed grids."""

    def __init__(
        self,
        order: FractionalOrder,
        space: SpaceGrid,
        omegas: np.ndarray,
        d_omega: float,
        g_hat: np.ndarray,
        h_hat: np.ndarray,
        cutoff: Optional[float],
        time_grid: Optional[TimeGrid],
        quadrature: str = "order4",
    ):
        self.order = order
        self.space = space
        self.omegas = np.asarray(omegas, dtype=np.float64)
        self.d_omega = float(d_omega)
        self.time_grid = time_grid
        self.cutoff = cutoff

        self.keep = np.ones(self.omegas.shape, dtype=bool)
        if cutoff is not None:
            if not cutoff > 0:
                raise ValueError("cutoff must be positive")
            self.keep = np.abs(self.omegas) <= cutoff
        self.g_hat = np.where(self.keep, g_hat, 0.0)
        self.h_hat = np.where(self.keep, h_hat, 0.0)

        k = symbol_values(order, self.omegas)
        x = space.points
        # sinh(k*d)/k for every node distance d; row j doubles as the flux
        # propagator at x_j and as the kernel at lag j.
        self.k_dist = sinh_ratio(k[None, :], x[:, None])
        cosh_x = cosh_clamped(k[None, :] * x[:, None])
        self.linear = cosh_x * self.g_hat[None, :] + self.k_dist * self.h_hat[None, :]

        wmat = volterra_weights(space.n_x, quadrature)
        lag = np.maximum(np.arange(space.n_x + 1)[:, None] - np.arange(space.n_x + 1)[None, :], 0)
        self.kw = wmat[:, :, None] * self.k_dist[lag]
        self.max_exponent = float(np.max(np.real(k[self.keep])) if self.keep.any() else 0.0)

    def volterra(self, f_rows: np.ndarray) -> np.ndarray:
        return self.space.spacing * np.einsum("jil,il->jl", self.kw, f_rows)

    def source_rows(self, field_values: np.ndarray, src) -> np.ndarray:
        if src is None:
            return np.zeros_like(field_values)
        rows = src.hat_rows(field_values, self.space, self.time_grid, self.omegas)
        return np.where(self.keep[None, :], rows, 0.0)

    def apply(self, field_values: np.ndarray, src) -> np.ndarray:
        return self.linear - self.volterra(self.source_rows(field_values, src))


def _sup_l2_increment(a: np.ndarray, b: np.ndarray, d_omega: float) -> float:
    diff = np.abs(a - b) ** 2
    return math.sqrt(float(np.max(np.sum(diff, axis=1))) * d_omega)


def picard_solve_hat(
    g_hat: np.ndarray,
    h_hat: np.ndarray,
    omegas: np.ndarray,
    d_omega: float,
    src,
    order: FractionalOrder,
    space: SpaceGrid,
    cfg: PicardConfig = PicardConfig(),
    cutoff: Optional[float] = None,
    time_grid: Optional[TimeGrid] = None,
    quadrature: str = "order4",
) -> tuple[np.ndarray, PicardReport]:
    """Fixed-point solve working directly on spectral boundary data.

    This is the core loop behind `picard_solve`; the instability demo calls
    it on a narrow frequency band where the problem is diagonal.  Increments
    that grow for 3 consecutive iterations are flagged in the report but the
    iteration continues: transient growth is expected when the per-step
    Lipschitz factor exceeds 1, and the factorial decay of the iterated
    operator guarantees eventual contraction.
    """
    ctx = _OperatorContext(
        order, space, omegas, d_omega, g_hat, h_hat, cutoff, time_grid, quadrature
    )
    values = np.zeros((space.n_x + 1, len(ctx.omegas)), dtype=np.complex128)
    increments = []
    converged = False
    growth_at = None
    rises = 0
    for it in range(1, cfg.max_iter + 1):
        nxt = ctx.apply(values, src)
        inc = _sup_l2_increment(nxt, values, ctx.d_omega)
        increments.append(inc)
        values = nxt
        if len(increments) >= 2 and inc > increments[-2]:
            rises += 1
            if rises >= 3 and growth_at is None:
                growth_at = it - 3
        else:
            rises = 0
        if inc < cfg.tol:
            converged = True
            break
    report = PicardReport(
        converged=converged,
        n_iter=len(increments),
        increments=np.asarray(increments),
        tol=cfg.tol,
        growth_flagged_at=growth_at,
        max_exponent=ctx.max_exponent,
        saturated=ctx.max_exponent >= EXP_CLAMP,
    )
    return values, report


def picard_solve(
    data: BoundaryPair,
    src,
    order: FractionalOrder,
    space: SpaceGrid,
    cfg: PicardConfig = PicardConfig(),
    cutoff: Optional[float] = None,
    quadrature: str = "order4",
) -> tuple[SpectralField, PicardReport]:
    """Solve the reconstruction problem for boundary data sampled in time.

    Returns the converged spectral field and an iteration report.  When
    max_iter is exhausted the best (last) iterate is returned with
    report.converged False; callers decide whether that is fatal.
    """
    tgrid = data.grid
    fgrid = tgrid.dual()
    g_hat = dft_forward(data.g).values
    h_hat = dft_forward(data.h).values
    values, report = picard_solve_hat(
        g_hat,
        h_hat,
        fgrid.points,
        fgrid.spacing,
        src,
        order,
        space,
        cfg,
        cutoff,
        time_grid=tgrid,
        quadrature=quadrature,
    )
    return SpectralField(space, fgrid, values), report


def apply_mild_operator(
    field: SpectralField,
    data: BoundaryPair,
    src,
    order: FractionalOrder,
    cutoff: Optional[float] = None,
) -> SpectralField:
    """One application of the integral operator Phi to a spectral field.

    The boundary spectra, the source spectrum of the current iterate, and
    (when a cutoff is given) their truncations are evaluated exactly as in
    the fixed-point loop.
    """
    tgrid = data.grid
    fgrid = tgrid.dual()
    if field.freq != fgrid:
        raise ValueError("field frequency grid does not match the boundary data grid")
    ctx = _OperatorContext(
        order,
        field.space,
        fgrid.points,
        fgrid.spacing,
        dft_forward(data.g).values,
        dft_forward(data.h).values,
        cutoff,
        tgrid,
    )
    return SpectralField(field.space, fgrid, ctx.apply(field.values, src))


def source_hat_rows(
    field: SpectralField,
    src,
    time_grid: TimeGrid,
    cutoff: Optional[float] = None,
) -> np.ndarray:
    """The source spectrum rows f^(x_j, w) the operator would use for `field`."""
    if src is None:
        return np.zeros_like(field.values)
    rows = src.hat_rows(field.values, field.space, time_grid, field.freq.points)
    if cutoff is not None:
        rows = np.where(np.abs(field.freq.points)[None, :] <= cutoff, rows, 0.0)
    return rows


def linear_spectral_field(
    data: BoundaryPair,
    order: FractionalOrder,
    space: SpaceGrid,
    cutoff: Optional[float] = None,
) -> SpectralField:
    """Closed-form field for a vanishing source: cosh(kx) g^ + sinh(kx)/k h^."""
    tgrid = data.grid
    fgrid = tgrid.dual()
    ctx = _OperatorContext(
        order,
        space,
        fgrid.points,
        fgrid.spacing,
        dft_forward(data.g).values,
        dft_forward(data.h).values,
        cutoff,
        tgrid,
    )
    return SpectralField(space, fgrid, ctx.linear.copy())


def field_to_time(field: SpectralField) -> np.ndarray:
    """Inverse transform every x row; returns the complex (n_x+1, N) grid."""
    dt = field.freq.dual().spacing
    return inverse_values(field.values, dt)


def field_to_real(field: SpectralField, threshold: float = 1e-8) -> tuple[np.ndarray, float]:
    """Real-valued time grid plus the imaginary residue ratio max|Im|/max|Re|.

    For fields built from real boundary data and a real pointwise source the
    rows are conjugate symmetric and the ratio sits at round-off.  A ratio
    above `threshold` is reported with a warning, never silently dropped;
    untruncated solves can legitimately trip it through the unpaired
    Nyquist line.
    """
    grid = field_to_time(field)
    re_scale = float(np.max(np.abs(grid.real)))
    ratio = 0.0 if re_scale == 0.0 else float(np.max(np.abs(grid.imag))) / re_scale
    if ratio > threshold:
        warnings.warn(
            f"imaginary residue ratio {ratio:.3e} exceeds {threshold:.1e}; "
            "field is not numerically real",
            stacklevel=2,
        )
    return grid.real.copy(), ratio


def contraction_bound(
    m: int,
    k_lip: float,
    omega_max: float,
    order: FractionalOrder,
    x: float = 1.0,
) -> float:
    """Worst-case m-step squared-increment factor of the iterated operator.

    Equals (K*exp(omega_max^(a/2)*cos(a*pi/4)))^(2m) * x^m / m!, evaluated in
    log space.  The factor eventually decays to 0 in m for any K and cutoff,
    which is what guarantees the fixed point exists.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return 1.0
    if k_lip == 0.0:
        return 0.0
    if x == 0.0:
        return 0.0
    rate = math.log(k_lip) + omega_max ** (order.alpha / 2.0) * order.cos_factor
    log_bound = 2.0 * m * rate + m * math.log(x) - math.lgamma(m + 1)
    return math.exp(log_bound) if log_bound < 700 else math.inf


def march_frequency_ode(
    data: BoundaryPair,
    f_hat_field: SpectralField,
    omega: float,
    order: FractionalOrder,
    refine: int = 10,
) -> np.ndarray:
    """Independent per-frequency check: RK4 march of u'' = (i*w)^a u - f^.

    The source column at the requested frequency is taken as fixed (already
    evaluated), interpolated with a cubic spline, and the initial value
    problem u(0) = g^(w), u'(0) = h^(w) is integrated with step
    spacing/refine.  Returns the profile at the space-grid nodes.  Used by
    the test suite to validate the Volterra quadrature; it shares no code
    with it.
    """
    if refine < 10:
        raise ValueError("refine must be at least 10")
    space = f_hat_field.space
    fgrid = f_hat_field.freq
    idx = int(np.argmin(np.abs(fgrid.points - omega)))
    w = float(fgrid.points[idx])
    k2 = complex(symbol_values(order, w)) ** 2
    g_hat = complex(dft_forward(data.g).values[idx])
    h_hat = complex(dft_forward(data.h).values[idx])

    col = f_hat_field.values[:, idx]
    spline = CubicSpline(space.points, col)

    h = space.spacing / refine
    y = np.array([g_hat, h_hat], dtype=np.complex128)

    def rhs(z: float, y: np.ndarray) -> np.ndarray:
        return np.array([y[1], k2 * y[0] - spline(z)], dtype=np.complex128)

    out = np.empty(space.n_x + 1, dtype=np.complex128)
    out[0] = y[0]
    z = 0.0
    for j in range(1, space.n_x + 1):
        for _ in range(refine):
            k1 = rhs(z, y)
            k2_ = rhs(z + h / 2, y + h / 2 * k1)
            k3 = rhs(z + h / 2, y + h / 2 * k2_)
            k4 = rhs(z + h, y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2_ + 2 * k3 + k4)
            z += h
        out[j] = y[0]
    return out
