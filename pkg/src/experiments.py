"""
Monte Carlo batches, parameter sweeps and the orbiting-versus-baseline comparison.

Runs fan out over a process pool; aggregation is a pure, serial fold over
run summaries, so re-aggregating a stored batch reproduces a table row
exactly. Tables are written as CSV; box plots as standalone SVG.
"""

import csv
import itertools
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import spearmanr
from tqdm import tqdm

from config import RESULTS_DIR, SHOW_PROGRESS, WORKERS
from src.experiment_config import ConfigError, ExperimentConfig, SweepSpec, load_config, with_overrides
from src.sim_engine import RunSummary, run
from src.target_models import MotionVariant
from src.theory_bounds import InfeasibleConfigError, bounds_summary, derive_parameters, validate_config
from src.trace_io import read_summaries, write_summaries
from utils import ensure_directory, format_seed_range, logger

# Percentiles use the nearest-rank definition
PERCENTILE_METHOD = "inverted_cdf"


@dataclass
class AggregateStats:
    """
    Box-plot statistics for one grid point.

    Encapsulation times of runs that timed out count as t_max, so the
    quartiles describe time-to-completion capped at the step limit.
    """
    config_name: str
    config_hash: str
    seeds: str
    runs: int = 0
    captured: int = 0
    errors: int = 0
    violations: int = 0
    median: Optional[float] = None
    p25: Optional[float] = None
    p75: Optional[float] = None
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    times: Tuple[int, ...] = ()
    parameters: Dict[str, Any] = field(default_factory=dict)
    skipped: Optional[str] = None

    @property
    def success(self) -> Optional[float]:
        """Fraction of runs that captured every target before t_max."""
        completed = self.runs - self.errors
        return self.captured / completed if completed > 0 else None

    def to_row(self) -> Dict[str, Any]:
        row = dict(self.parameters)
        row.update({
            "config": self.config_name,
            "config_hash": self.config_hash,
            "seeds": self.seeds,
            "runs": self.runs,
            "captured": self.captured,
            "success": self.success,
            "median": self.median,
            "p25": self.p25,
            "p75": self.p75,
            "min": self.minimum,
            "max": self.maximum,
            "violations": self.violations,
            "errors": self.errors,
            "skipped": self.skipped or "",
        })
        return row


@dataclass
class SweepTable:
    """A sweep's output: flat rows for the CSV plus, in simulation mode, the per-point statistics."""
    name: str
    mode: str
    axes: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    stats: List[AggregateStats] = field(default_factory=list)


@dataclass
class BaselineComparison:
    """Paired orbiting-versus-baseline statistics over the same seeds."""
    orbiting: AggregateStats
    baseline: AggregateStats
    paired: List[Tuple[int, Optional[int], Optional[int]]]

    def rows(self) -> List[Dict[str, Any]]:
        orbiting = dict(self.orbiting.to_row(), mode="orbiting")
        baseline = dict(self.baseline.to_row(), mode="baseline")
        return [orbiting, baseline]


# ---------------------------------------------------------------------------
# Batches
# ---------------------------------------------------------------------------

def _run_one(config: ExperimentConfig, seed: int, t_max: int) -> Dict[str, Any]:
    """Run one seed in a worker; failures become summaries with ``error`` set."""
    try:
        _, summary = run(config, seed, t_max, keep_trace=False)
    except Exception as e:
        logger.error(f"Run seed={seed} of '{config.name}' failed: {e}")
        summary = RunSummary.failed(config, seed, t_max, f"{type(e).__name__}: {e}")
    return summary.to_dict()


def run_batch(
    config: ExperimentConfig,
    seeds: Sequence[int],
    t_max: Optional[int] = None,
    workers: Optional[int] = None,
    desc: str = "Running"
) -> List[RunSummary]:
    """
    Run one config over many seeds.

    Runs execute in a process pool (inline when ``workers`` is 1). A run that
    raises is reported in its own summary and never aborts its siblings.

    Args:
        config: Experiment config
        seeds: Seeds to run (duplicates allowed)
        t_max: Step cap (defaults to the config's)
        workers: Process count (defaults to WORKERS)
        desc: Progress bar label

    Returns:
        One RunSummary per seed, in seed-list order
    """
    t_max = config.simulation.t_max if t_max is None else t_max
    workers = WORKERS if workers is None else workers
    results: List[Optional[Dict[str, Any]]] = [None] * len(seeds)
    logger.info(f"Batch '{config.name}': {len(seeds)} run(s), t_max={t_max}, workers={workers}")

    if workers <= 1 or len(seeds) <= 1:
        for index, seed in enumerate(tqdm(seeds, desc=desc, unit="run", disable=not SHOW_PROGRESS)):
            results[index] = _run_one(config, seed, t_max)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            future_to_index = {
                executor.submit(_run_one, config, seed, t_max): index
                for index, seed in enumerate(seeds)
            }
            with tqdm(total=len(seeds), desc=desc, unit="run", disable=not SHOW_PROGRESS) as pbar:
                for future in as_completed(future_to_index):
                    index = future_to_index[future]
                    try:
                        results[index] = future.result()
                    except Exception as e:
                        logger.error(f"Worker for seed {seeds[index]} failed: {e}")
                        results[index] = RunSummary.failed(
                            config, seeds[index], t_max, f"{type(e).__name__}: {e}"
                        ).to_dict()
                    pbar.update(1)

    summaries = [RunSummary.from_dict(r) for r in results]
    failed = sum(1 for s in summaries if s.error is not None)
    violating = sum(1 for s in summaries if s.violations)
    if failed:
        logger.warning(f"{failed} of {len(summaries)} run(s) raised an error")
    if violating:
        logger.warning(f"{violating} of {len(summaries)} run(s) recorded safety violations")
    return summaries


def _percentile(times: np.ndarray, q: float) -> float:
    return float(np.percentile(times, q, method=PERCENTILE_METHOD))


def aggregate(summaries: Sequence[RunSummary], parameters: Optional[Dict[str, Any]] = None) -> AggregateStats:
    """
    Fold run summaries into box-plot statistics.

    Args:
        summaries: Runs of a single config
        parameters: Grid-point values to carry on the row

    Returns:
        AggregateStats (quartiles None when no run completed)

    Raises:
        ValueError: If the summaries mix configs
    """
    parameters = dict(parameters or {})
    if not summaries:
        return AggregateStats("", "", "", parameters=parameters)
    hashes = {s.config_hash for s in summaries}
    if len(hashes) > 1:
        raise ValueError(f"Cannot aggregate runs of {len(hashes)} different configs")

    first = summaries[0]
    completed = [s for s in summaries if s.error is None]
    times = np.array(
        [s.encapsulation_time if s.captured else s.t_max for s in completed], dtype=int
    )
    stats = AggregateStats(
        config_name=first.config_name,
        config_hash=first.config_hash,
        seeds=format_seed_range(s.seed for s in summaries),
        runs=len(summaries),
        captured=sum(1 for s in completed if s.captured),
        errors=len(summaries) - len(completed),
        violations=sum(s.violations for s in summaries),
        times=tuple(int(t) for t in times),
        parameters=parameters,
    )
    if len(times):
        stats = replace(
            stats,
            median=_percentile(times, 50),
            p25=_percentile(times, 25),
            p75=_percentile(times, 75),
            minimum=float(times.min()),
            maximum=float(times.max()),
        )
    return stats


def reaggregate(path: Path, parameters: Optional[Dict[str, Any]] = None) -> AggregateStats:
    """Rebuild a table row from a stored batch file."""
    return aggregate([RunSummary.from_dict(d) for d in read_summaries(path)], parameters)


def save_batch(path: Path, summaries: Sequence[RunSummary]) -> Path:
    """Store run summaries as JSONL."""
    path = Path(path)
    write_summaries(path, (s.to_dict() for s in summaries))
    return path


# ---------------------------------------------------------------------------
# Tables and plots
# ---------------------------------------------------------------------------

def write_table(path: Path, rows: Sequence[Dict[str, Any]]) -> Path:
    """Write rows as CSV with the union of their keys as columns (first-seen order)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns: List[str] = []
    for row in rows:
        columns.extend(key for key in row if key not in columns)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: "" if row.get(key) is None else row.get(key) for key in columns})
    return path


def _point_label(parameters: Dict[str, Any]) -> str:
    return "\n".join(f"{path.rsplit('.', 1)[-1]}={value}" for path, value in parameters.items())


def write_box_plot(path: Path, stats: Sequence[AggregateStats], title: str = "") -> Optional[Path]:
    """
    Write an SVG with encapsulation-time box plots and success probability per grid point.

    Returns:
        The written path, or None when no grid point has runs
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    points = [s for s in stats if s.times]
    if not points:
        logger.warning(f"No completed runs to plot for {path}")
        return None

    fig, (top, bottom) = plt.subplots(2, 1, figsize=(max(6, 0.9 * len(points)), 7), sharex=True)
    positions = list(range(1, len(points) + 1))
    top.boxplot([list(s.times) for s in points], positions=positions, whis=(0, 100))
    top.set_ylabel("encapsulation time (steps)")
    if title:
        top.set_title(title)
    bottom.plot(positions, [s.success or 0.0 for s in points], marker="o")
    bottom.set_ylim(-0.05, 1.05)
    bottom.set_ylabel("success probability")
    bottom.set_xticks(positions)
    bottom.set_xticklabels([_point_label(s.parameters) for s in points], fontsize=8)
    fig.tight_layout()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def median_trend(stats: Sequence[AggregateStats], axis: str) -> Tuple[float, float]:
    """
    Spearman rank correlation between a swept axis and the median encapsulation time.

    Returns:
        (rho, p-value); NaN when fewer than three grid points have medians
    """
    pairs = [(s.parameters[axis], s.median) for s in stats if s.median is not None and axis in s.parameters]
    if len(pairs) < 3:
        return float("nan"), float("nan")
    result = spearmanr([p[0] for p in pairs], [p[1] for p in pairs])
    return float(result[0]), float(result[1])


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _grid(spec: SweepSpec) -> List[Dict[str, Any]]:
    if not spec.axes or any(len(values) == 0 for _, values in spec.axes):
        return []
    paths = [path for path, _ in spec.axes]
    return [dict(zip(paths, point)) for point in itertools.product(*(values for _, values in spec.axes))]


def _point_config(base: ExperimentConfig, spec: SweepSpec, parameters: Dict[str, Any]) -> ExperimentConfig:
    overrides = dict(parameters)
    if spec.t_max is not None:
        overrides["simulation.t_max"] = spec.t_max
    config = with_overrides(base, overrides)
    if spec.derive:
        config = derive_parameters(config)
    return config


def sweep(
    spec: SweepSpec,
    workers: Optional[int] = None,
    output_dir: Optional[str] = None
) -> SweepTable:
    """
    Run (or, in theory mode, tabulate) every point of a parameter grid.

    Each grid point is re-validated; points whose config cannot be built or
    fails validation are reported as skipped rows. Writes ``<name>.csv``,
    per-point batch files and, when requested, ``<name>.svg`` under the
    output directory.

    Args:
        spec: Sweep spec
        workers: Process count per batch
        output_dir: Output directory (defaults to RESULTS_DIR)

    Returns:
        SweepTable
    """
    base = load_config(spec.base)
    grid = _grid(spec)
    table = SweepTable(spec.name, spec.mode, [path for path, _ in spec.axes])
    out = ensure_directory(output_dir or RESULTS_DIR)
    seeds = list(range(spec.first_seed, spec.first_seed + spec.seeds))
    logger.info(f"Sweep '{spec.name}' ({spec.mode}): {len(grid)} grid point(s)")

    for index, parameters in enumerate(grid):
        try:
            config = _point_config(base, spec, parameters)
        except (ConfigError, InfeasibleConfigError) as e:
            logger.warning(f"Skipping grid point {parameters}: {e}")
            skipped = AggregateStats(base.name, "", "", parameters=parameters, skipped=str(e))
            table.stats.append(skipped)
            table.rows.append(skipped.to_row())
            continue

        if spec.mode == "theory":
            row = dict(parameters)
            row.update({"config_hash": config.digest, "feasible": validate_config(config).passed})
            row.update(bounds_summary(config))
            table.rows.append(row)
            continue

        report = validate_config(config)
        if not report.passed:
            reason = "infeasible: " + ", ".join(c.name for c in report.failures())
            logger.warning(f"Skipping grid point {parameters}: {reason}")
            skipped = AggregateStats(config.name, config.digest, format_seed_range(seeds),
                                     parameters=parameters, skipped=reason)
            table.stats.append(skipped)
            table.rows.append(skipped.to_row())
            continue

        summaries = run_batch(config, seeds, workers=workers, desc=f"{spec.name} [{index + 1}/{len(grid)}]")
        save_batch(out / "batches" / f"{spec.name}-{index:03d}.jsonl", summaries)
        stats = aggregate(summaries, parameters)
        table.stats.append(stats)
        table.rows.append(stats.to_row())

    if grid:
        csv_path = write_table(out / f"{spec.name}.csv", table.rows)
        logger.info(f"Wrote {csv_path}")
        if spec.plots and spec.mode == "simulation":
            svg_path = write_box_plot(out / f"{spec.name}.svg", table.stats, spec.name)
            if svg_path:
                logger.info(f"Wrote {svg_path}")
    return table


# ---------------------------------------------------------------------------
# Baseline comparison
# ---------------------------------------------------------------------------

def compare_baseline(
    config: ExperimentConfig,
    seeds: Sequence[int],
    t_max: Optional[int] = None,
    workers: Optional[int] = None
) -> BaselineComparison:
    """
    Run the same seeds with orbiting enabled and disabled.

    Raises:
        ConfigError: If any target can move
    """
    for index, target in enumerate(config.targets):
        if target.max_step > 0 or MotionVariant(target.motion.model) == MotionVariant.PATTERN_ESCAPE:
            raise ConfigError(f"Baseline comparison needs static targets; target {index} moves")

    orbiting_config = with_overrides(config, {"robots.baseline_mode": False})
    baseline_config = with_overrides(config, {"robots.baseline_mode": True})
    orbiting = run_batch(orbiting_config, seeds, t_max, workers, desc="Orbiting")
    baseline = run_batch(baseline_config, seeds, t_max, workers, desc="Baseline")
    paired = [(a.seed, a.encapsulation_time, b.encapsulation_time) for a, b in zip(orbiting, baseline)]
    return BaselineComparison(
        orbiting=aggregate(orbiting, {"baseline_mode": False}),
        baseline=aggregate(baseline, {"baseline_mode": True}),
        paired=paired,
    )
