"""
Synchronous fixed-timestep world evolution.

Every step works from one snapshot: all robots sense and decide against it,
all targets decide against it, then every move is applied at once. The
ground-truth safety oracle and the encapsulation detector run on the moved
state, and captures take effect before the next step. All randomness comes
from counter-based streams keyed by (seed, purpose, entity, step), so a
(config, seed) pair fully determines the trace.
"""

import math
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Any, Callable, Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist

from config import PLACEMENT_ATTEMPTS, QUADRATURE_DIVISIONS, RESAMPLE_ATTEMPTS, SAFETY_TOLERANCE
from config import SUMMARY_SCHEMA_VERSION, TRACE_SCHEMA_VERSION
from src import rng as streams
from src.environment import Environment
from src.experiment_config import ExperimentConfig
from src.geometry import TWO_PI, Pose, unit, wrap_angle
from src.robot_controller import Behavior, ControlOutput, OrbitSet, RobotParams, control_step
from src.signal_model import NoiseSpec, SensorArray, SignalField, sense
from src.target_models import (
    EncapsulationRing,
    MotionModel,
    TargetMove,
    TargetState,
    TargetSurroundings,
    apply_move,
    on_capture,
    target_step,
)
from src.theory_bounds import DriftAccumulator
from src.trace_io import TraceWriter
from utils import logger

# Violations kept verbatim on a run summary
VIOLATION_SAMPLES = 10

# Sector probe grid (radii x bearings) and the fallback bisector scan
SECTOR_PROBE_RADII = 4
SECTOR_PROBE_BEARINGS = 5
SECTOR_SCAN = 360

# Consecutive rejections before the sector initializer starts over
SECTOR_RESTART = 2000


class OverDenseConfigError(RuntimeError):
    """Raised when initial placement fails within the rejection budget."""
    pass


@dataclass(frozen=True)
class RobotState:
    """One robot at one timestep."""
    position: Tuple[float, float]
    heading: float
    frozen: bool = False

    @property
    def center(self) -> np.ndarray:
        return np.array(self.position, dtype=float)

    @property
    def pose(self) -> Pose:
        return Pose(self.position[0], self.position[1], self.heading)


@dataclass(frozen=True)
class WorldState:
    """
    The whole world after ``step`` completed timesteps.

    Random streams are addressed by (seed, purpose, entity index, step), so
    the step counter doubles as every entity's stream counter.
    """
    config: ExperimentConfig
    seed: int
    step: int
    robots: Tuple[RobotState, ...]
    targets: Tuple[TargetState, ...]
    capture_times: Tuple[Optional[int], ...]

    @property
    def robot_positions(self) -> np.ndarray:
        return np.array([r.position for r in self.robots], dtype=float).reshape(-1, 2)

    @property
    def target_positions(self) -> np.ndarray:
        return np.array([t.position for t in self.targets], dtype=float).reshape(-1, 2)

    @property
    def frozen(self) -> FrozenSet[int]:
        return frozenset(i for i, r in enumerate(self.robots) if r.frozen)

    @property
    def live_targets(self) -> List[int]:
        return [j for j, t in enumerate(self.targets) if not t.captured]

    @property
    def all_captured(self) -> bool:
        return all(t.captured for t in self.targets)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config_hash": self.config.digest,
            "seed": self.seed,
            "step": self.step,
            "robots": [asdict(r) for r in self.robots],
            "targets": [asdict(t) for t in self.targets],
            "capture_times": list(self.capture_times),
        }


@dataclass(frozen=True)
class SafetyViolation:
    """A ground-truth safety distance broken after a step."""
    step: int
    kind: str
    first: int
    second: Optional[int]
    distance: float
    limit: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class EncapsulationStatus:
    """Ring occupancy of one target."""
    target: int
    count: int
    members: Tuple[int, ...]
    spaced: bool
    encapsulated: bool
    step: Optional[int] = None


@dataclass(frozen=True)
class StepEvents:
    """What happened during one step."""
    step: int
    captures: Tuple[int, ...] = ()
    violations: Tuple[SafetyViolation, ...] = ()


class _Models(NamedTuple):
    environment: Environment
    sensors: SensorArray
    params: RobotParams
    orbits: OrbitSet
    ring: EncapsulationRing
    noise: NoiseSpec
    motions: Tuple[MotionModel, ...]
    boundary_margin: float
    target_spacing: float


@lru_cache(maxsize=16)
def _models(config: ExperimentConfig) -> _Models:
    return _Models(
        environment=config.environment.build(),
        sensors=config.sensor_array,
        params=config.robot_params(),
        orbits=config.orbit_set(),
        ring=config.encapsulation_ring(),
        noise=NoiseSpec(sigma=config.noise.sigma),
        motions=tuple(t.motion.build() for t in config.targets),
        boundary_margin=config.target_boundary_margin,
        target_spacing=config.target_spacing,
    )


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def _place_targets(config: ExperimentConfig, models: _Models, rng: np.random.Generator) -> List[TargetState]:
    placed: List[np.ndarray] = []
    targets = []
    attempts = 0
    for index, spec in enumerate(config.targets):
        if spec.center is not None:
            center = np.array(spec.center, dtype=float)
        else:
            while True:
                attempts += 1
                if attempts > PLACEMENT_ATTEMPTS:
                    raise OverDenseConfigError(
                        f"Could not place target {index} after {PLACEMENT_ATTEMPTS} attempts"
                    )
                try:
                    center = models.environment.sample_point(rng, margin=models.boundary_margin)
                except ValueError as e:
                    raise OverDenseConfigError(f"No room for targets: {e}") from e
                if all(math.dist(center, other) > models.target_spacing for other in placed):
                    break
        heading = spec.heading if spec.heading is not None else float(rng.uniform(0.0, TWO_PI))
        placed.append(center)
        targets.append(TargetState(
            position=(float(center[0]), float(center[1])),
            heading=float(heading),
            radius=spec.radius,
            max_step=spec.max_step,
            escape_radius=spec.escape_radius,
        ))
    return targets


def _sector_probes(anchor: np.ndarray, psi: float, config: ExperimentConfig) -> np.ndarray:
    """Points spread over the whole annular sector: both arcs, both edges and the interior."""
    init = config.initializer
    radii = np.linspace(init.min_range, init.max_range, SECTOR_PROBE_RADII)
    bearings = psi + np.linspace(-0.5, 0.5, SECTOR_PROBE_BEARINGS) * init.sector_angle
    return anchor + (radii[:, None, None] * unit(bearings)[None, :, :]).reshape(-1, 2)


def _sector_fit(environment: Environment, anchor: np.ndarray, psi: float, config: ExperimentConfig) -> float:
    """Fraction of the sector probes at least environment_safe inside the arena."""
    probes = _sector_probes(anchor, psi, config)
    return float(np.mean(environment.contains(probes, config.robots.environment_safe)))


def _sector_direction(environment: Environment, anchor: np.ndarray, config: ExperimentConfig, rng: np.random.Generator) -> float:
    """
    Pick a sector bisector whose whole sector lies inside the arena.

    Random draws come first; if none fits entirely, the best-fitting bisector
    on a fixed grid is used.
    """
    for _ in range(RESAMPLE_ATTEMPTS):
        psi = float(rng.uniform(0.0, TWO_PI))
        if _sector_fit(environment, anchor, psi, config) == 1.0:
            return psi
    grid = np.linspace(0.0, TWO_PI, SECTOR_SCAN, endpoint=False)
    scores = np.array([_sector_fit(environment, anchor, float(psi), config) for psi in grid])
    best = int(np.argmax(scores))
    logger.debug(f"No random sector fits; using bisector {grid[best]:.3f} ({scores[best]:.0%} inside)")
    return float(grid[best])


def _place_robots(
    config: ExperimentConfig,
    models: _Models,
    targets: List[TargetState],
    rng: np.random.Generator
) -> List[RobotState]:
    robots = config.robots
    if robots.count == 0:
        return []
    init = config.initializer
    environment = models.environment
    centers = np.array([t.position for t in targets], dtype=float).reshape(-1, 2)
    keep_out = max(robots.target_safe, config.encapsulation.radius)
    in_sector = init.kind == "sector" and len(centers) > 0

    if in_sector:
        anchor = centers[0]
        psi = _sector_direction(environment, anchor, config, rng)

        def sample() -> np.ndarray:
            bearing = psi + rng.uniform(-0.5, 0.5) * init.sector_angle
            return anchor + rng.uniform(init.min_range, init.max_range) * unit(bearing)
    else:
        def sample() -> np.ndarray:
            return environment.sample_point(rng, margin=robots.environment_safe)

    placed: List[np.ndarray] = []
    attempts = 0
    rejections = 0
    while len(placed) < robots.count:
        attempts += 1
        if attempts > PLACEMENT_ATTEMPTS:
            raise OverDenseConfigError(
                f"Placed only {len(placed)} of {robots.count} robots after {PLACEMENT_ATTEMPTS} attempts"
            )
        try:
            candidate = sample()
        except ValueError as e:
            raise OverDenseConfigError(f"No room for robots: {e}") from e
        if (
            environment.distance_to_boundary(candidate) >= robots.environment_safe
            and not (placed and np.min(np.hypot(*(np.array(placed) - candidate).T)) < robots.robot_safe)
            and not (len(centers) and np.min(np.hypot(*(centers - candidate).T)) <= keep_out)
        ):
            placed.append(candidate)
            rejections = 0
            continue
        rejections += 1
        # A jammed sector is redrawn from scratch
        if in_sector and rejections >= SECTOR_RESTART:
            logger.debug(f"Sector jammed after {len(placed)} robots; redrawing it")
            psi = _sector_direction(environment, anchor, config, rng)
            placed = []
            rejections = 0
    logger.debug(f"Placed {robots.count} robots in {attempts} attempts")
    headings = rng.uniform(0.0, TWO_PI, robots.count)
    return [
        RobotState(position=(float(p[0]), float(p[1])), heading=float(h))
        for p, h in zip(placed, headings)
    ]


def init_world(config: ExperimentConfig, seed: int) -> WorldState:
    """
    Place targets and robots for one run.

    Targets respect the boundary margin and mutual spacing; robots are placed
    by the configured initializer (a sector around the first target, or
    uniformly) with every safety distance satisfied.

    Args:
        config: Experiment config
        seed: Run seed

    Returns:
        WorldState at step 0

    Raises:
        OverDenseConfigError: If placement fails within PLACEMENT_ATTEMPTS
    """
    models = _models(config)
    rng = streams.init_stream(seed)
    targets = _place_targets(config, models, rng)
    robots = _place_robots(config, models, targets, rng)
    return WorldState(
        config=config,
        seed=seed,
        step=0,
        robots=tuple(robots),
        targets=tuple(targets),
        capture_times=(None,) * len(targets),
    )


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def _robot_target_distances(state: WorldState) -> np.ndarray:
    """Robot-target center distances with frozen-robot/captured-target pairs set to inf."""
    distances = cdist(state.robot_positions, state.target_positions)
    frozen = np.array([r.frozen for r in state.robots], dtype=bool)
    captured = np.array([t.captured for t in state.targets], dtype=bool)
    distances[np.ix_(frozen, captured)] = np.inf
    return distances


def check_safety(state: WorldState, previous: Optional[WorldState] = None) -> List[SafetyViolation]:
    """
    Ground-truth safety check on a state.

    Distances exactly at a safe distance are safe. Frozen robots are not
    checked against captured targets; every other robot still is. When ``previous`` is given and the
    config enables it, robot pairs are also checked at the midpoints of
    their moves.

    Returns:
        Violations in a fixed order (robot pairs, robot-target, boundary)
    """
    config = state.config
    robots = config.robots
    positions = state.robot_positions
    n = len(positions)
    violations: List[SafetyViolation] = []
    tol = SAFETY_TOLERANCE

    def pairs(points: np.ndarray, kind: str) -> None:
        distances = pdist(points)
        first, second = np.triu_indices(len(points), 1)
        for k in np.flatnonzero(distances < robots.robot_safe - tol):
            violations.append(SafetyViolation(
                state.step, kind, int(first[k]), int(second[k]), float(distances[k]), robots.robot_safe
            ))

    if n >= 2:
        pairs(positions, "robot-robot")

    if n and state.targets:
        distances = _robot_target_distances(state)
        for a, b in np.argwhere(distances < robots.target_safe - tol):
            violations.append(SafetyViolation(
                state.step, "robot-target", int(a), int(b), float(distances[a, b]), robots.target_safe
            ))

    if n:
        boundary = np.atleast_1d(_models(config).environment.distance_to_boundary(positions))
        for a in np.flatnonzero(boundary < robots.environment_safe - tol):
            violations.append(SafetyViolation(
                state.step, "robot-boundary", int(a), None, float(boundary[a]), robots.environment_safe
            ))

    if previous is not None and config.simulation.midpoint_check and n >= 2:
        pairs(0.5 * (positions + previous.robot_positions), "robot-robot-midpoint")
    return violations


def safety_margins(state: WorldState) -> Dict[str, Optional[float]]:
    """Smallest robot-robot, robot-target and robot-boundary distances (None when undefined)."""
    positions = state.robot_positions
    margins: Dict[str, Optional[float]] = {"robot_robot": None, "robot_target": None, "robot_boundary": None}
    if len(positions) >= 2:
        margins["robot_robot"] = float(pdist(positions).min())
    if len(positions) and state.targets:
        distances = _robot_target_distances(state)
        if np.isfinite(distances).any():
            margins["robot_target"] = float(distances.min())
    if len(positions):
        boundary = np.atleast_1d(_models(state.config).environment.distance_to_boundary(positions))
        margins["robot_boundary"] = float(boundary.min())
    return margins


def ring_members(state: WorldState, target_index: int) -> np.ndarray:
    """Indices of robots in the open-closed ring (r_g^safe, r_g^encap] of a target."""
    config = state.config
    positions = state.robot_positions
    if not len(positions):
        return np.zeros(0, dtype=int)
    distance = np.hypot(*(positions - state.target_positions[target_index]).T)
    return np.flatnonzero((distance > config.robots.target_safe) & (distance <= config.encapsulation.radius))


def check_encapsulation(state: WorldState, target_index: int) -> EncapsulationStatus:
    """
    Count the robots encapsulating a target.

    A target is encapsulated when at least n_g robots sit in its ring and
    every pair of them keeps the robot safe distance.
    """
    config = state.config
    target = state.targets[target_index]
    if target.captured:
        members = ring_members(state, target_index)
        return EncapsulationStatus(target_index, len(members), tuple(int(i) for i in members), True, True,
                                   state.capture_times[target_index])
    members = ring_members(state, target_index)
    spaced = True
    if len(members) >= 2:
        spaced = bool(pdist(state.robot_positions[members]).min() >= config.robots.robot_safe - SAFETY_TOLERANCE)
    encapsulated = spaced and len(members) >= config.encapsulation.robots_required
    return EncapsulationStatus(
        target=target_index,
        count=len(members),
        members=tuple(int(i) for i in members),
        spaced=spaced,
        encapsulated=encapsulated,
        step=state.step if encapsulated else None,
    )


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------

def _optional(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def _trace_record(
    state: WorldState,
    outputs: Sequence[ControlOutput],
    moves: Sequence[TargetMove],
    captures: Sequence[int],
    violations: Sequence[SafetyViolation]
) -> Dict[str, Any]:
    robots = []
    for robot, output in zip(state.robots, outputs):
        robots.append({
            "position": list(robot.position),
            "heading": robot.heading,
            "turn": output.turn,
            "step": output.step,
            "behavior": output.behavior.value,
            "target_range": _optional(output.target_range),
            "orbit": output.orbit,
            "frozen": robot.frozen,
        })
    targets = []
    for target, move in zip(state.targets, moves):
        targets.append({
            "position": list(target.position),
            "heading": target.heading,
            "turn": move.turn,
            "step": move.step,
            "escaping": bool(move.escaping),
            "captured": target.captured,
        })
    return {
        "schema_version": TRACE_SCHEMA_VERSION,
        "step": state.step,
        "robots": robots,
        "targets": targets,
        "margins": safety_margins(state),
        "captures": list(captures),
        "violations": len(violations),
    }


def step(
    state: WorldState,
    evaluation_order: Optional[Sequence[int]] = None
) -> Tuple[WorldState, StepEvents, Dict[str, Any]]:
    """
    Advance the world by one timestep.

    Args:
        state: Current state
        evaluation_order: Order in which robots are evaluated (a permutation
            of robot indices); the result does not depend on it

    Returns:
        (next state, events, trace record)
    """
    config = state.config
    models = _models(config)
    now = state.step
    n = len(state.robots)

    order = list(range(n)) if evaluation_order is None else [int(i) for i in evaluation_order]
    if sorted(order) != list(range(n)):
        raise ValueError(f"Evaluation order must be a permutation of 0..{n - 1}")

    positions = state.robot_positions
    live = state.live_targets
    signal_field = SignalField(
        target_profile=config.target_profile,
        robot_profile=config.robot_profile,
        environment_profile=config.environment_profile,
        target_sources=state.target_positions[live],
        robot_sources=positions,
        environment=models.environment,
        quadrature_divisions=QUADRATURE_DIVISIONS,
    )

    outputs: List[Optional[ControlOutput]] = [None] * n
    for i in order:
        robot = state.robots[i]
        if robot.frozen:
            outputs[i] = ControlOutput(0.0, 0.0, Behavior.FROZEN)
            continue
        readings = sense(
            robot.pose, models.sensors, signal_field, models.noise,
            streams.stream(state.seed, streams.SENSE, i, now), self_index=i,
        )
        outputs[i] = control_step(
            readings, models.params, models.orbits, streams.stream(state.seed, streams.CONTROL, i, now)
        )

    moves: List[TargetMove] = []
    for j, target in enumerate(state.targets):
        if target.captured:
            moves.append(TargetMove(0.0, 0.0, target.heading, False, target.waypoint_index))
            continue
        others = state.target_positions[[k for k in live if k != j]]
        surroundings = TargetSurroundings(
            models.environment, positions, others, models.boundary_margin, models.target_spacing
        )
        moves.append(target_step(target, models.motions[j], surroundings,
                                 streams.stream(state.seed, streams.TARGET, j, now)))

    robots = []
    for robot, output in zip(state.robots, outputs):
        if robot.frozen:
            robots.append(robot)
            continue
        heading = float(wrap_angle(robot.heading + output.turn))
        position = robot.center + output.step * unit(heading)
        robots.append(replace(robot, position=(float(position[0]), float(position[1])), heading=heading))
    targets = [t if t.captured else apply_move(t, m) for t, m in zip(state.targets, moves)]
    moved = replace(state, step=now + 1, robots=tuple(robots), targets=tuple(targets))

    violations = check_safety(moved, previous=state)
    if violations:
        logger.warning(f"Step {moved.step}: {len(violations)} safety violation(s), first: {violations[0]}")

    captures: List[int] = []
    frozen = moved.frozen
    capture_times = list(state.capture_times)
    positions_after = moved.robot_positions
    for j in moved.live_targets:
        status = check_encapsulation(moved, j)
        if status.encapsulated:
            targets[j], frozen = on_capture(targets[j], positions_after, frozen, models.ring)
            capture_times[j] = moved.step
            captures.append(j)
            logger.info(f"Target {j} encapsulated at step {moved.step} by robots {list(status.members)}")

    if captures:
        robots = [replace(r, frozen=True) if i in frozen else r for i, r in enumerate(robots)]
    final = replace(moved, robots=tuple(robots), targets=tuple(targets), capture_times=tuple(capture_times))
    record = _trace_record(final, outputs, moves, captures, violations)
    return final, StepEvents(final.step, tuple(captures), tuple(violations)), record


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

@dataclass
class RunSummary:
    """
    Outcome of one run.

    ``capture_times`` holds the step each target was encapsulated, or None
    on timeout. ``ring_occupancy`` counts robots in each target's ring at
    the end of the run. ``error`` is set when the run raised instead of
    finishing.
    """
    config_name: str
    config_hash: str
    seed: int
    t_max: int
    steps: int = 0
    capture_times: List[Optional[int]] = field(default_factory=list)
    violations: int = 0
    violation_samples: List[Dict[str, Any]] = field(default_factory=list)
    behavior_histogram: Dict[str, int] = field(default_factory=dict)
    ring_occupancy: List[int] = field(default_factory=list)
    min_margins: Dict[str, Optional[float]] = field(default_factory=dict)
    drift: Dict[str, Any] = field(default_factory=dict)
    halted: bool = False
    error: Optional[str] = None
    schema_version: int = SUMMARY_SCHEMA_VERSION

    @property
    def captured(self) -> bool:
        return self.error is None and all(t is not None for t in self.capture_times)

    @property
    def encapsulation_time(self) -> Optional[int]:
        """Step at which the last target was captured, None on timeout or error."""
        if not self.captured:
            return None
        return max((t for t in self.capture_times if t is not None), default=0)

    def to_dict(self) -> Dict[str, Any]:
        document = asdict(self)
        document["captured"] = self.captured
        document["encapsulation_time"] = self.encapsulation_time
        return document

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunSummary":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def failed(cls, config: ExperimentConfig, seed: int, t_max: int, error: str) -> "RunSummary":
        return cls(config.name, config.digest, seed, t_max,
                   capture_times=[None] * len(config.targets), error=error)


class SwarmSimulation:
    """
    A stateful run: the current world plus everything the summary needs.

    Usage:
        simulation = SwarmSimulation(config, seed)
        summary = simulation.run(t_max, sink=records.append)
    """

    def __init__(self, config: ExperimentConfig, seed: int, state: Optional[WorldState] = None):
        self.config = config
        self.seed = seed
        self.state = state if state is not None else init_world(config, seed)
        self.violations: List[SafetyViolation] = []
        self.behaviors: Counter = Counter()
        self.drift = DriftAccumulator()
        self.halted = False
        self.min_margins = dict(safety_margins(self.state))

    @property
    def done(self) -> bool:
        return self.state.all_captured or self.halted

    def _track_margins(self, margins: Dict[str, Optional[float]]) -> None:
        for key, value in margins.items():
            if value is None:
                continue
            current = self.min_margins.get(key)
            self.min_margins[key] = value if current is None else min(current, value)

    def advance(self, evaluation_order: Optional[Sequence[int]] = None) -> Tuple[StepEvents, Dict[str, Any]]:
        """Run one step and fold it into the run statistics."""
        self.state, events, record = step(self.state, evaluation_order)
        self.violations.extend(events.violations)
        self.behaviors.update(robot["behavior"] for robot in record["robots"])
        self.drift.add(record)
        self._track_margins(record["margins"])
        if events.violations and self.config.simulation.halt_on_violation:
            logger.warning(f"Halting run (seed {self.seed}) at step {self.state.step} on safety violation")
            self.halted = True
        return events, record

    def run(self, t_max: int, sink: Optional[Callable[[Dict[str, Any]], None]] = None) -> RunSummary:
        """
        Step until every target is captured, a violation halts the run, or ``t_max`` steps.

        Args:
            t_max: Step cap
            sink: Called with every trace record

        Returns:
            RunSummary
        """
        while not self.done and self.state.step < t_max:
            _, record = self.advance()
            if sink is not None:
                sink(record)
        return self.summary(t_max)

    def summary(self, t_max: int) -> RunSummary:
        state = self.state
        return RunSummary(
            config_name=self.config.name,
            config_hash=self.config.digest,
            seed=self.seed,
            t_max=t_max,
            steps=state.step,
            capture_times=list(state.capture_times),
            violations=len(self.violations),
            violation_samples=[v.to_dict() for v in self.violations[:VIOLATION_SAMPLES]],
            behavior_histogram=dict(sorted(self.behaviors.items())),
            ring_occupancy=[len(ring_members(state, j)) for j in range(len(state.targets))],
            min_margins=dict(self.min_margins),
            drift=self.drift.result().to_dict(),
            halted=self.halted,
        )


def run(
    config: ExperimentConfig,
    seed: int,
    t_max: Optional[int] = None,
    keep_trace: bool = True,
    trace_path: Optional[str] = None
) -> Tuple[List[Dict[str, Any]], RunSummary]:
    """
    Run one simulation.

    Args:
        config: Experiment config
        seed: Run seed
        t_max: Step cap (defaults to the config's)
        keep_trace: Return the trace records in memory
        trace_path: Also stream the trace to this JSONL file

    Returns:
        (trace records, or [] when keep_trace is False; RunSummary)
    """
    t_max = config.simulation.t_max if t_max is None else t_max
    simulation = SwarmSimulation(config, seed)
    trace: List[Dict[str, Any]] = []

    if trace_path is None:
        summary = simulation.run(t_max, trace.append if keep_trace else None)
    else:
        with TraceWriter(trace_path) as writer:
            def sink(record: Dict[str, Any]) -> None:
                writer.write(record)
                if keep_trace:
                    trace.append(record)
            summary = simulation.run(t_max, sink)
        logger.debug(f"Wrote {writer.count} trace records to {trace_path}")

    logger.debug(
        f"Run seed={seed}: steps={summary.steps} captured={summary.captured} violations={summary.violations}"
    )
    return trace, summary
