#!/usr/bin/env python3
"""
Swarm Encapsulation Simulator - Main Entry Point

Validates experiment configs against the theoretical bounds, runs single
simulations, seed batches, parameter sweeps and the orbiting-versus-baseline
comparison.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from utils import logger, set_verbose, parse_seed_range, format_seed_range, save_json
from src.experiment_config import load_config, load_sweep
from src.experiments import (
    aggregate, compare_baseline, median_trend, reaggregate, run_batch, save_batch, sweep, write_table
)
from src.presets import list_presets
from src.sim_engine import run
from src.theory_bounds import InfeasibleConfigError, bounds_summary, drift_diagnostics, validate_config
from src.trace_io import read_trace
from config import RESULTS_DIR, SEEDS_PER_POINT

# Exit code for strict-mode failures (infeasible config or safety violation)
EXIT_STRICT = 2


def _check_strict(config, strict: bool) -> bool:
    """Validate before running; in strict mode a failed check stops the command."""
    report = validate_config(config)
    if report.passed:
        return True
    failed = ", ".join(c.name for c in report.failures())
    if strict:
        logger.error(f"Config '{config.name}' is infeasible ({failed}); refusing to run in strict mode")
        return False
    logger.warning(f"Config '{config.name}' fails: {failed}")
    return True


def cmd_validate(args) -> int:
    config = load_config(args.config)
    report = validate_config(config)
    print(report.format_text())
    if args.json:
        logger.info(f"Report saved: {save_json(Path(args.json), report.to_dict())}")
    if args.strict and not report.passed:
        return EXIT_STRICT
    return 0


def cmd_run(args) -> int:
    config = load_config(args.config)
    if not _check_strict(config, args.strict):
        return EXIT_STRICT
    logger.info(f"Running '{config.name}' (seed {args.seed})")
    _, summary = run(config, args.seed, args.tmax, keep_trace=False, trace_path=args.trace)
    if args.trace:
        logger.info(f"Trace saved: {args.trace}")
    if args.summary:
        logger.info(f"Summary saved: {save_json(Path(args.summary), summary.to_dict())}")

    logger.info(f"Steps: {summary.steps}")
    logger.info(f"Capture times: {summary.capture_times}")
    logger.info(f"Safety violations: {summary.violations}")
    logger.info(f"Behaviors: {summary.behavior_histogram}")
    if args.strict and summary.violations:
        return EXIT_STRICT
    return 0


def _print_stats(label: str, stats) -> None:
    success = "-" if stats.success is None else f"{stats.success:.2f}"
    logger.info(
        f"{label}: runs={stats.runs} success={success} median={stats.median} "
        f"p25={stats.p25} p75={stats.p75} min={stats.minimum} max={stats.maximum} "
        f"violations={stats.violations} errors={stats.errors}"
    )


def cmd_batch(args) -> int:
    if args.reaggregate:
        stats = reaggregate(Path(args.reaggregate))
        _print_stats(stats.config_name, stats)
        return 0
    if not args.config:
        logger.error("batch needs a config (or --reaggregate FILE)")
        return 1
    config = load_config(args.config)
    if not _check_strict(config, args.strict):
        return EXIT_STRICT
    seeds = parse_seed_range(args.seeds)
    summaries = run_batch(config, seeds, args.tmax, args.workers)
    output = Path(args.output) if args.output else Path(RESULTS_DIR) / f"{config.name}-{format_seed_range(seeds)}.jsonl"
    logger.info(f"Batch saved: {save_batch(output, summaries)}")
    stats = aggregate(summaries)
    _print_stats(config.name, stats)
    if args.strict and stats.violations:
        return EXIT_STRICT
    return 0


def cmd_sweep(args) -> int:
    spec = load_sweep(args.spec)
    if args.seeds is not None:
        spec = replace(spec, seeds=args.seeds)
    table = sweep(spec, workers=args.workers, output_dir=args.output_dir)
    for stats in table.stats:
        label = ", ".join(f"{k}={v}" for k, v in stats.parameters.items())
        if stats.skipped:
            logger.info(f"{label}: skipped ({stats.skipped})")
        else:
            _print_stats(label, stats)
    if table.mode == "simulation" and len(table.axes) == 1:
        rho, pvalue = median_trend(table.stats, table.axes[0])
        logger.info(f"Median trend along {table.axes[0]}: spearman rho={rho:.3f} (p={pvalue:.3g})")
    violations = sum(s.violations for s in table.stats)
    if args.strict and violations:
        return EXIT_STRICT
    return 0


def cmd_compare_baseline(args) -> int:
    config = load_config(args.config)
    if not _check_strict(config, args.strict):
        return EXIT_STRICT
    seeds = parse_seed_range(args.seeds)
    comparison = compare_baseline(config, seeds, args.tmax, args.workers)
    _print_stats("orbiting", comparison.orbiting)
    _print_stats("baseline", comparison.baseline)
    if args.output:
        logger.info(f"Table saved: {write_table(Path(args.output), comparison.rows())}")
    if args.strict and (comparison.orbiting.violations or comparison.baseline.violations):
        return EXIT_STRICT
    return 0


def cmd_bounds(args) -> int:
    config = load_config(args.config)
    values = bounds_summary(config)
    if args.json:
        print(json.dumps(values, indent=2, sort_keys=True))
    else:
        width = max(len(key) for key in values)
        for key, value in values.items():
            shown = "-" if value is None else (f"{value:.6g}" if isinstance(value, float) else value)
            print(f"{key:<{width}}  {shown}")
    return 0


def cmd_drift(args) -> int:
    stats = drift_diagnostics(read_trace(Path(args.trace)))
    print(json.dumps(stats.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_presets(args) -> int:
    for name, kind, description in list_presets():
        print(f"{name:<22} {kind:<7} {description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Simulate minimalist robot swarms encapsulating moving targets",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py validate preset:reference          # Check a config against every bound
  python main.py run preset:reference --seed 3 --trace out/trace.jsonl
  python main.py batch preset:random-target --seeds 0..49
  python main.py sweep preset:sensor-sweep-escape   # Sensor count 3..12
  python main.py compare-baseline preset:static-target --seeds 0..49
  python main.py bounds my_config.json
        """
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Show debug output")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def with_config(sub, required: bool = True):
        sub.add_argument("config", nargs=None if required else "?",
                         help="Config JSON file or preset:NAME")

    def with_strict(sub):
        sub.add_argument("--strict", action="store_true",
                         help=f"Exit with code {EXIT_STRICT} on an infeasible config or any safety violation")

    def with_run_options(sub):
        sub.add_argument("--tmax", type=int, default=None, help="Step cap (default: from config)")
        sub.add_argument("-w", "--workers", type=int, default=None,
                         help="Parallel worker processes (default: WORKERS from config or 4)")

    sub = subparsers.add_parser("validate", help="Check a config against every theoretical bound")
    with_config(sub)
    with_strict(sub)
    sub.add_argument("--json", type=str, default=None, help="Also write the report as JSON")
    sub.set_defaults(func=cmd_validate)

    sub = subparsers.add_parser("run", help="Run one simulation")
    with_config(sub)
    with_strict(sub)
    sub.add_argument("--seed", type=int, default=0, help="Run seed (default: 0)")
    sub.add_argument("--tmax", type=int, default=None, help="Step cap (default: from config)")
    sub.add_argument("--trace", type=str, default=None, help="Write the per-step trace as JSONL")
    sub.add_argument("--summary", type=str, default=None, help="Write the run summary as JSON")
    sub.set_defaults(func=cmd_run)

    sub = subparsers.add_parser("batch", help="Run one config over a seed range")
    with_config(sub, required=False)
    with_strict(sub)
    with_run_options(sub)
    sub.add_argument("--seeds", type=str, default=f"0..{SEEDS_PER_POINT - 1}",
                     help="Seeds, e.g. 0..49 or 1,4,10..12")
    sub.add_argument("-o", "--output", type=str, default=None, help="Batch JSONL file (default: under RESULTS_DIR)")
    sub.add_argument("--reaggregate", type=str, default=None, help="Aggregate a stored batch file instead of running")
    sub.set_defaults(func=cmd_batch)

    sub = subparsers.add_parser("sweep", help="Run a parameter sweep")
    sub.add_argument("spec", help="Sweep spec JSON file or preset:NAME")
    with_strict(sub)
    sub.add_argument("-w", "--workers", type=int, default=None, help="Parallel worker processes")
    sub.add_argument("--seeds", type=int, default=None, help="Override seeds per grid point")
    sub.add_argument("--output-dir", type=str, default=None, help=f"Output directory (default: {RESULTS_DIR})")
    sub.set_defaults(func=cmd_sweep)

    sub = subparsers.add_parser("compare-baseline", help="Compare orbiting against the baseline controller")
    with_config(sub)
    with_strict(sub)
    with_run_options(sub)
    sub.add_argument("--seeds", type=str, default=f"0..{SEEDS_PER_POINT - 1}", help="Seeds, e.g. 0..49")
    sub.add_argument("-o", "--output", type=str, default=None, help="Write the paired table as CSV")
    sub.set_defaults(func=cmd_compare_baseline)

    sub = subparsers.add_parser("bounds", help="Print every theoretical bound for a config")
    with_config(sub)
    sub.add_argument("--json", action="store_true", help="Print as JSON")
    sub.set_defaults(func=cmd_bounds)

    sub = subparsers.add_parser("drift", help="Measure drift statistics from a trace file")
    sub.add_argument("trace", help="Trace JSONL file")
    sub.set_defaults(func=cmd_drift)

    sub = subparsers.add_parser("presets", help="List shipped presets")
    sub.set_defaults(func=cmd_presets)
    return parser


def main():
    """Main entry point for the swarm encapsulation simulator."""
    parser = build_parser()
    args = parser.parse_args()
    set_verbose(args.verbose)

    try:
        sys.exit(args.func(args))

    except KeyboardInterrupt:
        logger.info("\n\nProcess interrupted by user")
        sys.exit(130)

    except InfeasibleConfigError as e:
        logger.error(f"\n\nERROR: {e}")
        sys.exit(EXIT_STRICT)

    except Exception as e:
        logger.error(f"\n\nERROR: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
