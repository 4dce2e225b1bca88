"""Command-line front end: solve, table, rate, illposed.

Configuration is a flat key-value text file (``key = value`` per line, ``#``
comments); keys match ExperimentConfig field names exactly and unknown keys
are errors, so misspelled parameters never silently default.  Every command
is a pure function of (config file, seed): reruns produce byte-identical
CSV output.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure
(non-convergence; partial output is still written).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .experiment import (
    ExperimentConfig,
    benchmark_src,
    boundary_data,
    exact_solution,
    fit_convergence_rates,
    inject_noise,
    run_error_table,
)
from .illposed import amplification
from .solver import BoundaryPair, field_to_real, picard_solve
from .spectral import TimeGrid, TimeSignal


class ConfigError(ValueError):
    pass


_TUPLE_FLOAT_FIELDS = {"omega_max", "x_points", "rate_x", "rate_deltas"}
_TUPLE_INT_FIELDS = {"n_list"}
_OPTIONAL_FLOAT_FIELDS = {"cutoff"}
_EXTRA_FIELDS = {"boundary_csv": str}


def _parse_value(key: str, raw: str, type_name: str):
    raw = raw.strip()
    if key in _TUPLE_FLOAT_FIELDS:
        return tuple(float(v) for v in raw.split(",") if v.strip())
    if key in _TUPLE_INT_FIELDS:
        return tuple(int(v) for v in raw.split(",") if v.strip())
    if key in _OPTIONAL_FLOAT_FIELDS:
        return None if raw.lower() == "none" else float(raw)
    if type_name == "int":
        return int(raw)
    if type_name == "float":
        return float(raw)
    return raw


def load_config(path: str) -> tuple[ExperimentConfig, dict]:
    """Parse the flat key-value config file; unknown keys are fatal."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    known = {f.name: str(f.type) for f in dataclasses.fields(ExperimentConfig)}
    overrides: dict = {}
    extras: dict = {}
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key in known:
            try:
                overrides[key] = _parse_value(key, raw, known[key])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
        elif key in _EXTRA_FIELDS:
            extras[key] = raw
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    try:
        cfg = ExperimentConfig(**overrides)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return cfg, extras


def _read_boundary_csv(path: str, grid: TimeGrid) -> BoundaryPair:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"boundary data file not found: {path}")
    rows = list(csv.reader(p.read_text(encoding="utf-8").splitlines()))
    if rows and rows[0] and rows[0][0].strip().lower() == "t":
        rows = rows[1:]
    if len(rows) != grid.n_samples:
        raise ConfigError(
            f"{path}: expected {grid.n_samples} sample rows, found {len(rows)}"
        )
    g = np.array([float(r[1]) for r in rows])
    h = np.array([float(r[2]) for r in rows])
    return BoundaryPair(TimeSignal(grid, g), TimeSignal(grid, h))


def _write_solution_csv(fh, x_points: np.ndarray, t_points: np.ndarray, grid: np.ndarray) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t"] + [f"x={x:.10g}" for x in x_points])
    for l, t in enumerate(t_points):
        writer.writerow([format(t, ".10g")] + [format(grid[j, l], ".10g") for j in range(len(x_points))])


def cmd_solve(cfg: ExperimentConfig, extras: dict, out: str, quiet: bool) -> int:
    grid = cfg.time_grid
    if "boundary_csv" in extras:
        data = _read_boundary_csv(extras["boundary_csv"], grid)
    else:
        data = boundary_data(grid)
    if cfg.noise_amplitude > 0:
        data, measured = inject_noise(data, cfg.noise_amplitude, cfg.seed)
        if not quiet:
            print(f"measured noise level: {measured:.6e}")
    src = benchmark_src(cfg)
    field, report = picard_solve(data, src, cfg.order, cfg.space, cfg.picard, cfg.cutoff)
    values, imag_ratio = field_to_real(field, threshold=math.inf)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        _write_solution_csv(fh, cfg.space.points, grid.points, values)
    if not quiet:
        print(report.summary())
        print(f"imaginary residue ratio: {imag_ratio:.3e}")
        print(f"wrote {out}")
    return 0 if report.converged else 3


def cmd_table(cfg: ExperimentConfig, out: str, quiet: bool, threads: int) -> int:
    table = run_error_table(cfg, threads=threads)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        table.write_csv(fh)
    if not quiet:
        print(f"wrote {out} ({len(table.x_points)}x{len(table.omega_max)} cells, "
              f"{table.n_reps} repetitions)")
    if np.isnan(table.mean).any():
        print("warning: some cells did not converge and were marked invalid", file=sys.stderr)
    return 0


def cmd_rate(cfg: ExperimentConfig, out: str, quiet: bool) -> int:
    fits = fit_convergence_rates(cfg)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "fitted_slope", "expected_slope", "residual"])
        for fit in fits:
            writer.writerow(
                [
                    format(fit.x, ".10g"),
                    format(fit.slope, ".10g"),
                    format(fit.expected, ".10g"),
                    format(fit.residual, ".10g"),
                ]
            )
    if any(f.degenerate for f in fits):
        print("warning: degenerate fit detected", file=sys.stderr)
        return 3
    if not quiet:
        for fit in fits:
            print(f"x={fit.x:.4g}: slope {fit.slope:.4f} (expected {fit.expected:.4f})")
        print(f"wrote {out}")
    return 0


def cmd_illposed(cfg: ExperimentConfig, out: str, quiet: bool) -> int:
    if not cfg.n_list:
        raise ConfigError("n_list must not be empty")
    rows = []
    for n in cfg.n_list:
        result = amplification(
            n, cfg.order, cfg.space, cfg.picard, cutoff=cfg.cutoff
        )
        rows.append(result)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "data_norm", "sup_solution_norm", "ratio", "saturated"])
        for r in rows:
            writer.writerow(
                [
                    r.n,
                    format(r.data_norm, ".10g"),
                    format(r.sup_solution_norm, ".10g"),
                    format(r.ratio, ".10g"),
                    int(r.saturated),
                ]
            )
    if not quiet:
        for r in rows:
            print(f"n={r.n}: data norm {r.data_norm:.4e}, ratio {r.ratio:.4e}")
        print(f"wrote {out}")
    return 0


_DEFAULT_OUT = {
    "solve": "solution.csv",
    "table": "table.csv",
    "rate": "rates.csv",
    "illposed": "illposed.csv",
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sideways",
        description="Regularized sideways solver for time-fractional diffusion",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "solve one problem and write the u(x,t) grid"),
        ("table", "reproduce the relative-error table"),
        ("rate", "fit empirical convergence rates under the L2 rule"),
        ("illposed", "measure the instability amplification over n"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="flat key-value config file")
        sp.add_argument("--out", default=None, help="output CSV path")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        sp.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg, extras = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        out = args.out or _DEFAULT_OUT[args.command]
        if args.command == "solve":
            return cmd_solve(cfg, extras, out, args.quiet)
        if args.command == "table":
            return cmd_table(cfg, out, args.quiet, max(1, args.threads))
        if args.command == "rate":
            return cmd_rate(cfg, out, args.quiet)
        return cmd_illposed(cfg, out, args.quiet)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
