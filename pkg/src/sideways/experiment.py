"""Benchmark experiment: manufactured solution, noise model, error tables, rates.

The benchmark problem has exact solution u(x,t) = e^(-2x) t^2 on
x in [0,1], t in [0, 2*pi], boundary data g(t) = t^2, h(t) = -2 t^2, and
the nonlinear source

    f(x,t,u) = u/(1+u^2) + f~(x,t),
    f~(x,t)  = e^(-2x) (2 t^(2-a)/Gamma(3-a) - t^2/(1+e^(-4x) t^4) - 4 t^2),

which is Lipschitz in u with constant 1.  Plugging the exact solution into
f cancels the rational terms, leaving exactly the fractional time
derivative of u minus u_xx, so the manufactured problem is consistent by
construction.

Noise is multiplicative and uniform: each boundary sample is scaled by
(1 + amplitude/sqrt(pi) * r) with r drawn independently from [-1, 1] by a
counter-based generator keyed on (seed, stream, signal), so a fixed seed
reproduces tables bit for bit regardless of scheduling.  The noise level
fed to selection rules is always the measured discrete value
||g_noisy - g|| + ||h_noisy - h||.

Reference relative errors for the two benchmark orders (alpha = 0.4 and
0.7) are embedded for comparison; the published experiment does not state
its noise amplitude, so `sweep_noise_amplitude` scans amplitudes and
reports how close each lands to the reference cells.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .kernel import FractionalOrder, caputo_monomial, symbol_values
from .regularization import l2_rule_epsilon, l2_error_bound
from .solver import (
    BoundaryPair,
    PicardConfig,
    SourceSpec,
    SpaceGrid,
    field_to_real,
    picard_solve,
)
from .spectral import TimeGrid, TimeSignal, forward_values, inverse_values, l2_norm

# Cutoffs and x stations of the reference tables.
TABLE_OMEGA_MAX = (16.9339, 20.9183, 24.9027, 31.8755)
TABLE_X_POINTS = (0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95)

# Reference mean relative errors, rows indexed by TABLE_X_POINTS and columns
# by TABLE_OMEGA_MAX, for the two benchmark fractional orders.
BENCHMARK_ERRORS = {
    0.4: np.array(
        [
            [0.1378, 0.0941, 0.0756, 0.0580],
            [0.1581, 0.1015, 0.0821, 0.0639],
            [0.1472, 0.1157, 0.0942, 0.0758],
            [0.1869, 0.1386, 0.1138, 0.0966],
            [0.2160, 0.1688, 0.1411, 0.1270],
            [0.2396, 0.2089, 0.1729, 0.1631],
            [0.2729, 0.2478, 0.2034, 0.1971],
            [0.2872, 0.2777, 0.2268, 0.2240],
            [0.3292, 0.3022, 0.2447, 0.2430],
        ]
    ),
    0.7: np.array(
        [
            [0.1358, 0.0996, 0.0805, 0.0622],
            [0.1562, 0.1244, 0.1024, 0.0817],
            [0.2175, 0.1779, 0.1502, 0.1255],
            [0.2891, 0.2620, 0.2249, 0.1946],
            [0.3785, 0.3583, 0.3032, 0.2690],
            [0.4551, 0.4230, 0.3585, 0.3245],
            [0.5118, 0.4682, 0.3916, 0.3604],
            [0.5652, 0.4989, 0.4153, 0.3874],
            [0.5902, 0.5256, 0.4372, 0.4127],
        ]
    ),
}

# Noise amplitude used for table reproduction, chosen by the documented
# amplitude sweep (see sweep_noise_amplitude and the README): over the grid
# {0.02, 0.05, 0.08, 0.10, 0.12, 0.15, 0.20, 0.30, 0.40} this value
# minimizes the mean |log2(cell/reference)| over both tables while keeping
# the headline cells within a factor of 2.
DEFAULT_NOISE_AMPLITUDE = 0.15


def exact_solution(x, t) -> np.ndarray:
    """u(x,t) = e^(-2x) t^2 (broadcasts over arrays)."""
    return np.exp(-2.0 * np.asarray(x)) * np.asarray(t) ** 2


def manufactured_forcing(order: FractionalOrder, x, t) -> np.ndarray:
    """The fixed part f~(x,t) of the benchmark source."""
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    caputo = caputo_monomial(order, 2, t)
    rational = t**2 / (1.0 + np.exp(-4.0 * x) * t**4)
    return np.exp(-2.0 * x) * (caputo - rational - 4.0 * t**2)


def manufactured_source(order: FractionalOrder) -> SourceSpec:
    """The benchmark source u/(1+u^2) + f~(x,t); Lipschitz constant 1."""

    def evaluate(x: float, t: np.ndarray, u: np.ndarray) -> np.ndarray:
        return u / (1.0 + u * u) + manufactured_forcing(order, x, t)

    return SourceSpec(eval=evaluate, lipschitz_k=1.0)


def symbol_fractional_samples(grid: TimeGrid, order: FractionalOrder) -> np.ndarray:
    """Fractional time derivative of the t^2 samples via the spectral symbol.

    Computes IDFT[(i*w)^alpha * DFT[t^2]] on the grid.  This is the discrete
    counterpart of the analytic Caputo derivative 2 t^(2-a)/Gamma(3-a); the
    two differ by a periodization mismatch concentrated at low frequencies,
    because t^2 keeps growing and is not square integrable on the line.
    """
    t = grid.points
    spec = forward_values(t**2, grid.spacing)
    multiplier = symbol_values(order, grid.dual().points) ** 2
    return inverse_values(multiplier * spec, grid.spacing).real


def table_source(order: FractionalOrder, grid: TimeGrid) -> SourceSpec:
    """Benchmark source with the forcing's fractional term built spectrally.

    Identical to `manufactured_source` except that the Caputo piece of the
    forcing is synthesized with the same discrete symbol the solver uses,
    which removes the low-frequency periodization mismatch and makes the
    discrete problem exactly consistent with the sampled exact solution.
    The reference error tables are only reproducible in this mode: with the
    analytic forcing the mismatch accumulates through the depth integral
    and dominates the large-x cells (see noiseless_errors with
    forcing="analytic" for the measured floors).
    """
    c_t = symbol_fractional_samples(grid, order)

    def evaluate(x: float, t: np.ndarray, u: np.ndarray) -> np.ndarray:
        rational = t**2 / (1.0 + np.exp(-4.0 * x) * t**4)
        return u / (1.0 + u * u) + np.exp(-2.0 * x) * (c_t - rational - 4.0 * t**2)

    return SourceSpec(eval=evaluate, lipschitz_k=1.0)


def benchmark_src(cfg: "ExperimentConfig") -> SourceSpec:
    if cfg.forcing == "spectral":
        return table_source(cfg.order, cfg.time_grid)
    if cfg.forcing == "analytic":
        return manufactured_source(cfg.order)
    raise ValueError(f"unknown forcing mode {cfg.forcing!r}")


def boundary_data(grid: TimeGrid) -> BoundaryPair:
    """Benchmark boundary samples g(t) = t^2, h(t) = -2 t^2."""
    t = grid.points
    return BoundaryPair(TimeSignal(grid, t**2), TimeSignal(grid, -2.0 * t**2))


def _uniform_pm1(seed: int, stream: tuple[int, int], signal: int, n: int) -> np.ndarray:
    bitgen = np.random.Philox(
        key=np.array([seed, 0], dtype=np.uint64),
        counter=np.array([0, stream[0], stream[1], signal], dtype=np.uint64),
    )
    return np.random.Generator(bitgen).uniform(-1.0, 1.0, n)


def inject_noise(
    data: BoundaryPair,
    amplitude: float,
    seed: int,
    stream: tuple[int, int] = (0, 0),
) -> tuple[BoundaryPair, float]:
    """Multiplicative uniform noise on both boundary signals.

    Each sample v becomes v * (1 + amplitude/sqrt(pi) * r) with r uniform on
    [-1, 1], drawn independently per sample and per signal from a
    counter-based generator, so identical (seed, stream) reproduce the draw
    bit for bit.  Returns the noisy pair and the measured noise level
    ||g_noisy - g|| + ||h_noisy - h||.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    grid = data.grid
    if amplitude == 0.0:
        return data, 0.0
    scale = amplitude / math.sqrt(math.pi)
    r_g = _uniform_pm1(seed, stream, 0, grid.n_samples)
    r_h = _uniform_pm1(seed, stream, 1, grid.n_samples)
    g_noisy = TimeSignal(grid, data.g.values * (1.0 + scale * r_g))
    h_noisy = TimeSignal(grid, data.h.values * (1.0 + scale * r_h))
    measured = l2_norm(TimeSignal(grid, g_noisy.values - data.g.values)) + l2_norm(
        TimeSignal(grid, h_noisy.values - data.h.values)
    )
    return BoundaryPair(g_noisy, h_noisy), measured


def amplitude_for_measured_delta(target: float, data: BoundaryPair) -> float:
    """Amplitude whose expected measured noise level equals `target`.

    E||g_noisy - g||^2 = (amplitude^2/(3*pi)) ||g||^2 for uniform noise on
    [-1, 1], so amplitude = target * sqrt(3*pi) / (||g|| + ||h||).
    """
    if target < 0:
        raise ValueError("target must be nonnegative")
    denom = l2_norm(data.g) + l2_norm(data.h)
    if denom == 0.0:
        raise ValueError("boundary data is identically zero")
    return target * math.sqrt(3.0 * math.pi) / denom


def relative_error(exact_grid: np.ndarray, reg_grid: np.ndarray, x_index: int) -> float:
    """(sum_l |u - u_reg|^2 / sum_l |u|^2)^(1/2) along the time row at x_index."""
    exact_row = np.asarray(exact_grid)[x_index]
    reg_row = np.asarray(reg_grid)[x_index]
    denom = float(np.sum(np.abs(exact_row) ** 2))
    if denom == 0.0:
        raise ValueError(f"exact solution row {x_index} is identically zero")
    num = float(np.sum(np.abs(exact_row - reg_row) ** 2))
    return math.sqrt(num / denom)


def x_index(space: SpaceGrid, x: float) -> int:
    """Grid index of a requested station; x must sit on a node."""
    j = round(x * space.n_x)
    if not 0 <= j <= space.n_x or abs(j * space.spacing - x) > 1e-9:
        raise ValueError(
            f"x = {x} is not a node of the {space.n_x}-interval space grid"
        )
    return j


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs of the benchmark experiment (all commands share this record)."""

    alpha: float = 0.4
    n_samples: int = 512
    t_max: float = 2.0 * math.pi
    n_x: int = 40
    omega_max: tuple[float, ...] = TABLE_OMEGA_MAX
    noise_amplitude: float = DEFAULT_NOISE_AMPLITUDE
    x_points: tuple[float, ...] = TABLE_X_POINTS
    rate_x: tuple[float, ...] = (0.15, 0.5)
    rate_deltas: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)
    seed: int = 202608
    repetitions: int = 20
    tol: float = 1e-10
    max_iter: int = 200
    n_list: tuple[int, ...] = (50, 200, 1000)
    cutoff: Optional[float] = None
    forcing: str = "spectral"

    def __post_init__(self) -> None:
        FractionalOrder(self.alpha)  # validates the range
        TimeGrid(self.n_samples, self.t_max)  # validates power of two
        if self.n_x < 1:
            raise ValueError("n_x must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be nonnegative")
        if not self.seed >= 0 or self.seed > 2**64 - 1:
            raise ValueError("seed must fit in 64 bits")
        if self.forcing not in ("spectral", "analytic"):
            raise ValueError(f"forcing must be 'spectral' or 'analytic', got {self.forcing!r}")

    @property
    def order(self) -> FractionalOrder:
        return FractionalOrder(self.alpha)

    @property
    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.n_samples, self.t_max)

    @property
    def space(self) -> SpaceGrid:
        return SpaceGrid(self.n_x)

    @property
    def picard(self) -> PicardConfig:
        return PicardConfig(tol=self.tol, max_iter=self.max_iter)


@dataclass(frozen=True)
class ErrorTable:
    """Mean/stddev relative errors indexed by (x station, cutoff)."""

    alpha: float
    x_points: tuple[float, ...]
    omega_max: tuple[float, ...]
    mean: np.ndarray
    std: np.ndarray
    n_valid: np.ndarray
    n_reps: int
    seed: int

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "omega_max", "alpha", "mean_error", "std_error", "n_reps", "seed"])
        for i, x in enumerate(self.x_points):
            for j, w in enumerate(self.omega_max):
                writer.writerow(
                    [
                        format(x, ".10g"),
                        format(w, ".10g"),
                        format(self.alpha, ".10g"),
                        format(self.mean[i, j], ".10g"),
                        format(self.std[i, j], ".10g"),
                        int(self.n_valid[i, j]),
                        self.seed,
                    ]
                )


def _solve_cell(
    cfg: ExperimentConfig,
    exact_grid: np.ndarray,
    data: BoundaryPair,
    src: SourceSpec,
    indices: Sequence[int],
    cutoff: Optional[float],
    stream: tuple[int, int],
    amplitude: float,
) -> Optional[np.ndarray]:
    noisy, _ = inject_noise(data, amplitude, cfg.seed, stream)
    field, report = picard_solve(noisy, src, cfg.order, cfg.space, cfg.picard, cutoff)
    if not report.converged:
        return None
    grid, _ = field_to_real(field, threshold=math.inf)
    return np.array([relative_error(exact_grid, grid, j) for j in indices])


def run_error_table(cfg: ExperimentConfig, threads: int = 1) -> ErrorTable:
    """Reproduce the benchmark table for cfg.alpha.

    Each (cutoff, repetition) cell draws fresh noise, solves with
    truncation, and records the relative error at every requested x
    station; cells whose solve fails to converge are marked invalid rather
    than aborting the table.  Aggregation order is fixed by job index, so
    results are identical for any thread count.
    """
    data = boundary_data(cfg.time_grid)
    src = benchmark_src(cfg)
    space = cfg.space
    indices = [x_index(space, x) for x in cfg.x_points]
    exact_grid = exact_solution(space.points[:, None], cfg.time_grid.points[None, :])

    n_w = len(cfg.omega_max)
    results = np.full((n_w, cfg.repetitions, len(indices)), np.nan)

    def job(iw_rep: tuple[int, int]) -> None:
        iw, rep = iw_rep
        errs = _solve_cell(
            cfg, exact_grid, data, src, indices, cfg.omega_max[iw], (rep, iw), cfg.noise_amplitude
        )
        if errs is not None:
            results[iw, rep] = errs

    jobs = [(iw, rep) for iw in range(n_w) for rep in range(cfg.repetitions)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(job, jobs))
    else:
        for item in jobs:
            job(item)

    valid = ~np.isnan(results[:, :, 0])
    mean = np.full((len(indices), n_w), np.nan)
    std = np.full((len(indices), n_w), np.nan)
    n_valid = valid.sum(axis=1)
    for iw in range(n_w):
        if n_valid[iw] == 0:
            continue
        cells = results[iw, valid[iw]]
        mean[:, iw] = cells.mean(axis=0)
        std[:, iw] = cells.std(axis=0)
    return ErrorTable(
        alpha=cfg.alpha,
        x_points=tuple(cfg.x_points),
        omega_max=tuple(cfg.omega_max),
        mean=mean,
        std=std,
        n_valid=np.broadcast_to(n_valid, (len(indices), n_w)).copy(),
        n_reps=cfg.repetitions,
        seed=cfg.seed,
    )


def noiseless_errors(cfg: ExperimentConfig, omega_max: Optional[float]) -> np.ndarray:
    """Relative errors of the noise-free solve at every x station.

    Establishes the discretization floor (quadrature plus periodization)
    under a given cutoff; noise studies sit on top of this floor.
    """
    data = boundary_data(cfg.time_grid)
    src = benchmark_src(cfg)
    space = cfg.space
    indices = [x_index(space, x) for x in cfg.x_points]
    exact_grid = exact_solution(space.points[:, None], cfg.time_grid.points[None, :])
    errs = _solve_cell(cfg, exact_grid, data, src, indices, omega_max, (0, 0), 0.0)
    if errs is None:
        raise RuntimeError("noise-free solve did not converge")
    return errs


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log(error) against log(measured noise level)."""

    x: float
    slope: float
    expected: float
    residual: float
    n_points: int
    degenerate: bool


def rate_benchmark(cfg: ExperimentConfig) -> tuple[BoundaryPair, SourceSpec, np.ndarray]:
    """Band-limited problem used for the convergence-rate study.

    The L2 selection rule's delta^(1-x) rate presupposes an exact solution
    whose weighted spectral energy is finite; the t^2 benchmark violates
    that premise on a finite window (its discrete spectrum carries a slow
    1/w periodization tail), so its truncation bias decays only
    logarithmically in delta and buries the theoretical rate.  This
    problem uses u(x,t) = e^(-2x) * phi(t) with a trigonometric phi
    supported on |w| <= 5, for which the premise holds on the grid and the
    truncation bias vanishes once the rule's cutoff clears the band.
    Returns (boundary data, source, exact sample grid).
    """
    grid = cfg.time_grid
    t = grid.points
    phi = np.sin(t) + 0.5 * np.sin(2.0 * t) + 0.2 * np.sin(5.0 * t)
    multiplier = symbol_values(cfg.order, grid.dual().points) ** 2
    d_sym = inverse_values(multiplier * forward_values(phi, grid.spacing), grid.spacing).real

    def evaluate(x: float, tt: np.ndarray, u: np.ndarray) -> np.ndarray:
        u_exact = math.exp(-2.0 * x) * phi
        return (
            u / (1.0 + u * u)
            - u_exact / (1.0 + u_exact * u_exact)
            + math.exp(-2.0 * x) * (d_sym - 4.0 * phi)
        )

    src = SourceSpec(eval=evaluate, lipschitz_k=1.0)
    data = BoundaryPair(TimeSignal(grid, phi), TimeSignal(grid, -2.0 * phi))
    exact_grid = np.exp(-2.0 * cfg.space.points[:, None]) * phi[None, :]
    return data, src, exact_grid


def fit_convergence_rates(
    cfg: ExperimentConfig,
    x_list: Optional[Sequence[float]] = None,
    delta_targets: Optional[Sequence[float]] = None,
) -> list[RateFit]:
    """Empirical convergence rates under the L2 selection rule.

    Runs on the band-limited problem of `rate_benchmark`.  For every target
    noise level the amplitude is calibrated so the measured level lands
    near the target, the cutoff is chosen by the L2 rule from the measured
    level of each draw, and the solve's relative error is recorded at the
    requested x stations.  Slopes are fitted per station over all
    (target, repetition) points.
    """
    x_list = list(cfg.rate_x if x_list is None else x_list)
    deltas = list(cfg.rate_deltas if delta_targets is None else delta_targets)
    if len(deltas) < 3:
        raise ValueError("need at least 3 noise levels")
    span = max(deltas) / min(deltas)
    if span < 100.0:
        raise ValueError("noise levels must span at least 2 decades")

    data, src, exact_grid = rate_benchmark(cfg)
    space = cfg.space
    indices = [x_index(space, x) for x in x_list]

    measured_log = []
    errors_log = [[] for _ in x_list]
    for i_d, target in enumerate(deltas):
        amplitude = amplitude_for_measured_delta(target, data)
        for rep in range(cfg.repetitions):
            noisy, measured = inject_noise(data, amplitude, cfg.seed, (rep, 1000 + i_d))
            eps = l2_rule_epsilon(measured, cfg.order)
            field, report = picard_solve(
                noisy, src, cfg.order, space, cfg.picard, cutoff=1.0 / eps
            )
            if not report.converged:
                continue
            grid, _ = field_to_real(field, threshold=math.inf)
            measured_log.append(math.log(measured))
            for ix, j in enumerate(indices):
                errors_log[ix].append(math.log(relative_error(exact_grid, grid, j)))

    fits = []
    logs = np.asarray(measured_log)
    for ix, x in enumerate(x_list):
        errs = np.asarray(errors_log[ix])
        degenerate = len(logs) < 3 or np.ptp(logs) < 1e-6
        if degenerate:
            fits.append(RateFit(x, math.nan, 1.0 - x, math.nan, len(logs), True))
            continue
        coeffs = np.polyfit(logs, errs, 1)
        resid = float(np.sqrt(np.mean((np.polyval(coeffs, logs) - errs) ** 2)))
        fits.append(RateFit(x, float(coeffs[0]), 1.0 - x, resid, len(logs), False))
    return fits


def theoretical_bound_slope(
    x: float,
    deltas: Sequence[float],
    order: FractionalOrder,
    m1: float = 1.0,
    k_lip: float = 1.0,
) -> float:
    """Log-log slope of the theoretical L2 bound under the L2 rule.

    The bound collapses to a constant times delta^(1-x), so the fitted
    slope equals 1-x to round-off; this is the dual of the empirical fit.
    """
    logs = np.log(np.asarray(deltas, dtype=np.float64))
    vals = [
        l2_error_bound(x, d, l2_rule_epsilon(d, order), order, m1, k_lip) for d in deltas
    ]
    coeffs = np.polyfit(logs, np.log(vals), 1)
    return float(coeffs[0])


@dataclass(frozen=True)
class SweepEntry:
    amplitude: float
    score: float
    table: ErrorTable


def sweep_noise_amplitude(
    cfg: ExperimentConfig,
    amplitudes: Iterable[float],
    reference: Optional[np.ndarray] = None,
    threads: int = 1,
) -> list[SweepEntry]:
    """Scan noise amplitudes and score each table against the reference cells.

    The score is the mean absolute log2 ratio between produced and
    reference cells (0 = exact match, 1 = off by a factor of 2 on average).
    Entries are returned sorted by score; the best amplitude is the
    documented choice for table reproduction.
    """
    if reference is None:
        if cfg.alpha not in BENCHMARK_ERRORS:
            raise ValueError(f"no reference table for alpha = {cfg.alpha}")
        reference = BENCHMARK_ERRORS[cfg.alpha]
    entries = []
    for amp in amplitudes:
        table = run_error_table(replace(cfg, noise_amplitude=amp), threads=threads)
        score = float(np.nanmean(np.abs(np.log2(table.mean / reference))))
        entries.append(SweepEntry(amplitude=amp, score=score, table=table))
    return sorted(entries, key=lambda e: e.score)
