"""Command-line front end.

Commands: noise, rate, optimality, covcheck, selftest.  Every command is a
pure function of (config file, master seed): outputs are byte-identical
across reruns and worker counts.  Exit codes: 0 success, 1 check failure,
2 configuration rejected, 3 numerical abort inside a sample.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ExperimentConfig
from .exceptions import ConfigurationError, NumericalAbort
from .experiments import (
    default_thread_count,
    run_optimality_experiment,
    run_rate_experiment,
    simulate_hierarchy,
)
from .noise import HurstParams, RngSpec, UniformGrid, fbm_path, format_float
from .selftest import format_report, run_suites

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbmlab",
        description="Strong-error laboratory for SDEs driven by smooth fractional noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, description in (
        ("noise", "dump one noise path and its integral hierarchy as CSV"),
        ("rate", "Monte Carlo strong-error study with a fitted convergence rate"),
        ("optimality", "scaled-error limit study against the first-order ODE"),
        ("covcheck", "empirical covariance law check of the noise generator"),
        ("selftest", "run all module invariant suites"),
    ):
        cmd = sub.add_parser(name, help=description)
        cmd.add_argument("--config", type=str, default=None, help="JSON config file")
        cmd.add_argument("--seed", type=int, default=None, help="override master seed")
        cmd.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker count (default: machine parallelism; results do not depend on it)",
        )
        cmd.add_argument("--out", type=str, default=None, help="override output directory")
        cmd.add_argument(
            "--print-config",
            action="store_true",
            help="print the fully resolved config (all defaults explicit) and exit",
        )
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    return config.override(**overrides) if overrides else config


def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_noise(config: ExperimentConfig) -> int:
    config.validate_noise()
    params = HurstParams(config.hurst)
    grid = UniformGrid(config.noise_steps)
    if params.levels >= 1:
        hierarchy = simulate_hierarchy(params, grid, config.dim, RngSpec(config.master_seed), 0)
        base, levels = hierarchy.base, hierarchy.levels
    else:
        # Rough index below 1: no integration levels, the base is the noise.
        base = fbm_path(params, grid, config.dim, RngSpec(config.master_seed).stream(0))
        levels = ()
    columns = [("level0", base)] + [
        (f"level{j + 1}", level) for j, level in enumerate(levels)
    ]
    header = ["t"]
    for label, _ in columns:
        header.extend(f"{label}_{i + 1}" for i in range(config.dim))
    lines = [",".join(header)]
    for i in range(grid.steps + 1):
        row = [format_float(grid.gridpoint(i))]
        for _, path in columns:
            row.extend(format_float(v) for v in path.values[i])
        lines.append(",".join(row))
    dest = _out_dir(config) / "noise.csv"
    dest.write_text("\n".join(lines) + "\n")
    print(f"wrote {dest} ({grid.steps + 1} rows, {len(header)} columns)")
    return EXIT_OK


def cmd_rate(config: ExperimentConfig, threads: int) -> int:
    result = run_rate_experiment(config, threads=threads)
    out = _out_dir(config)
    lines = result.report.csv_lines(fmt=format_float)
    (out / "errors.csv").write_text("\n".join(lines) + "\n")
    summary = result.report.summary()
    (out / "rate_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if result.report.exact:
        print("rate: exact (all error estimates are zero; the scheme reproduces the reference)")
    else:
        lo, hi = result.report.slope_ci
        print(
            f"rate: slope={result.report.slope:.4f} ci=[{lo:.4f}, {hi:.4f}] "
            f"r^2={result.report.r_squared:.4f}"
        )
    print(f"wrote {out / 'errors.csv'} and {out / 'rate_summary.json'}")
    return EXIT_OK


def cmd_optimality(config: ExperimentConfig, threads: int) -> int:
    result = run_optimality_experiment(config, threads=threads)
    out = _out_dir(config)
    lines = ["path,n,e_terminal,c_terminal,deviation"]
    for idx, verdict in enumerate(result.verdicts):
        for n, e_t, c_t, dev in verdict.rows:
            lines.append(
                f"{idx},{n},{format_float(e_t)},{format_float(c_t)},{format_float(dev)}"
            )
    (out / "optimality.csv").write_text("\n".join(lines) + "\n")
    summary = {
        "paths": len(result.verdicts),
        "eligible": result.eligible,
        "confirmed": result.confirmed,
        "confirmed_fraction": result.confirmed_fraction,
        "verdicts": [
            {
                "path": idx,
                "verdict": v.verdict,
                "small_limit": v.small_limit,
                "c_terminal": v.c_terminal,
                "relative_deviation": v.relative_deviation,
                "limit_deviations": list(v.limit_deviations),
            }
            for idx, v in enumerate(result.verdicts)
        ],
    }
    (out / "verdict.json").write_text(json.dumps(summary, indent=2) + "\n")
    frac = result.confirmed_fraction
    print(
        f"verdict: confirmed on {result.confirmed}/{result.eligible} eligible paths "
        f"({frac:.1%})" if result.eligible else "verdict: no eligible paths (all limits tiny)"
    )
    print(f"wrote {out / 'optimality.csv'} and {out / 'verdict.json'}")
    return EXIT_OK


def cmd_covcheck(config: ExperimentConfig) -> int:
    results = run_suites(config.master_seed, names=["covcheck"])
    print(format_report(results))
    return EXIT_OK if all(r.ok for r in results) else EXIT_CHECK_FAILED


def cmd_selftest(config: ExperimentConfig) -> int:
    results = run_suites(config.master_seed)
    print(format_report(results))
    return EXIT_OK if all(r.ok for r in results) else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.print_config:
            print(config.to_json())
            return EXIT_OK
        threads = args.threads if args.threads is not None else default_thread_count()
        if threads < 1:
            raise ConfigurationError(f"--threads must be >= 1, got {threads}")
        if args.command == "noise":
            return cmd_noise(config)
        if args.command == "rate":
            return cmd_rate(config, threads)
        if args.command == "optimality":
            return cmd_optimality(config, threads)
        if args.command == "covcheck":
            return cmd_covcheck(config)
        return cmd_selftest(config)
    except ConfigurationError as err:
        print(f"configuration rejected: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as err:
        where = f" (sample {err.sample_index})" if err.sample_index is not None else ""
        print(f"numerical abort{where}: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
