"""
Reactive control law for a memoryless robot.

Each timestep a robot turns by theta_r and moves d_r (turn-then-move). The
heading is chosen from angular ranges built around the strongest sensor, and
the step is the largest one that provably keeps clear of neighbors, the
target keep-out ring and (implicitly) the boundary. All angles here are in
the robot frame: 0 is the robot's current heading.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from config import ARGMAX_CANDIDATES, SAFETY_TOLERANCE
from src.geometry import AngularInterval, Pose, TWO_PI, distance_to_sector, unit
from src.signal_model import (
    ReadingSet,
    SensorArray,
    SignalProfile,
    infer_distance,
)

# Orbit index reported when the robot is inside the inner keep-out ring
INSIDE = -1

# Candidate step lengths tested per heading, from 0 to the cap inclusive
STEP_SAMPLES = 49


class InfeasibleGeometryError(ValueError):
    """Raised when a sensor array is too coarse to build an avoid range."""
    pass


class Behavior(str, Enum):
    """Behavior labels, as written to traces."""
    AVOID_BOUNDARY = "avoid-boundary"
    RANDOM_WALK = "random-walk"
    AVOID_TARGET = "avoid-target"
    ORBIT_TANGENT = "orbit-tangent"
    APPROACH_TARGET = "approach-target"
    TANGENT_FALLBACK = "tangent-fallback"
    MIN_SIGNAL_FALLBACK = "min-signal-fallback"
    FROZEN = "frozen"


@dataclass(frozen=True)
class OrbitSet:
    """
    Concentric orbits around a target.

    Orbit 0 is (inner0, outer0]; orbit i > 0 is (outer0 + (i-1)w, outer0 + i*w].
    Orbit i rotates (-1)^(i-1), so orbit 0 is clockwise (-1).
    """
    inner0: float
    outer0: float
    width: float

    def __post_init__(self):
        if self.inner0 <= 0:
            raise ValueError(f"Inner orbit radius must be positive, got {self.inner0}")
        if self.outer0 <= self.inner0:
            raise ValueError(f"Outer radius {self.outer0} must exceed inner radius {self.inner0}")
        if self.width <= 0:
            raise ValueError(f"Orbit width must be positive, got {self.width}")

    def rotation(self, orbit: int) -> int:
        """Tie-breaking rotation of an orbit: -1 clockwise, +1 counter-clockwise."""
        return 1 if (orbit - 1) % 2 == 0 else -1

    def inflated(self, factor: float) -> "OrbitSet":
        """Copy with the inner radius scaled by ``factor`` (noise compensation)."""
        return OrbitSet(self.inner0 * factor, max(self.outer0, self.inner0 * factor + 1e-9), self.width)


@dataclass(frozen=True)
class RobotParams:
    """Everything a robot knows about itself and the signal models."""
    radius: float
    max_step: float
    target_safe: float
    robot_safe: float
    environment_safe: float
    sensors: SensorArray
    target_profile: SignalProfile
    robot_profile: SignalProfile
    environment_profile: SignalProfile
    target_max_step: float = 0.0
    baseline_mode: bool = False
    argmax_candidates: int = ARGMAX_CANDIDATES
    refine_los: bool = False
    sensing_margin: float = 1.0

    def __post_init__(self):
        if self.max_step < 0:
            raise ValueError(f"Maximum step must be non-negative, got {self.max_step}")
        if self.robot_safe <= 2 * self.radius:
            raise ValueError(
                f"Robot safe distance {self.robot_safe} must exceed the robot diameter {2 * self.radius}"
            )
        if self.argmax_candidates < 3 or self.argmax_candidates % 2 == 0:
            raise ValueError(f"argmax_candidates must be odd and >= 3, got {self.argmax_candidates}")
        if self.sensing_margin < 1.0:
            raise ValueError(f"Sensing margin must be >= 1, got {self.sensing_margin}")


@dataclass(frozen=True)
class ControlOutput:
    """Control decision for one robot at one timestep."""
    turn: float
    step: float
    behavior: Behavior
    target_range: Optional[float] = None
    orbit: Optional[int] = None


# ---------------------------------------------------------------------------
# Angular ranges
# ---------------------------------------------------------------------------

def los_range(
    k: int,
    sensors: SensorArray,
    refined: bool = False,
    neighbor_readings: Optional[Tuple[float, float]] = None
) -> AngularInterval:
    """
    Headings that may point at the source seen strongest by sensor k.

    Args:
        k: Index of the strongest sensor
        sensors: Sensor array
        refined: Halve the range using the neighboring readings (noiseless sensing only)
        neighbor_readings: Readings of sensors k-1 and k+1

    Returns:
        [phi_k - h_k, phi_k + h_k], or the half on the stronger neighbor's side
    """
    if not 0 <= k < sensors.count:
        raise IndexError(f"Sensor index {k} out of range for {sensors.count} sensors")
    center = sensors.angles[k]
    half = float(sensors.half_gaps[k])
    if refined and neighbor_readings is not None:
        previous, following = neighbor_readings
        if previous > following:
            return AngularInterval(center - half, center)
        if following > previous:
            return AngularInterval(center, center + half)
    return AngularInterval(center - half, center + half)


def avoid_range(k: int, sensors: SensorArray, los: Optional[AngularInterval] = None) -> AngularInterval:
    """
    Headings that move away from a source seen by sensor k.

    Built as [hi + pi/2, lo + 3pi/2] from the line-of-sight range [lo, hi].

    Raises:
        InfeasibleGeometryError: If the range is empty (half-gap >= pi/2)
    """
    los = los if los is not None else los_range(k, sensors)
    interval = AngularInterval(los.hi + np.pi / 2, los.lo + 3 * np.pi / 2)
    if interval.width <= 0.0:
        raise InfeasibleGeometryError(
            f"Avoid range is empty for sensor {k}: line-of-sight width {los.width:.4f} >= pi"
        )
    return interval


def tangent_ranges(
    k: int,
    sensors: SensorArray,
    los: Optional[AngularInterval] = None
) -> Tuple[AngularInterval, AngularInterval]:
    """
    Headings that move tangentially around a source seen by sensor k.

    Returns:
        (clockwise range, counter-clockwise range) = (los + pi/2, los + 3pi/2)
    """
    los = los if los is not None else los_range(k, sensors)
    return los.shifted(np.pi / 2), los.shifted(3 * np.pi / 2)


def current_orbit(target_range: float, orbits: OrbitSet) -> int:
    """
    Orbit index for an inferred target range.

    Returns:
        INSIDE when range <= inner0, otherwise i with inner_i < range <= outer_i
    """
    if target_range <= orbits.inner0:
        return INSIDE
    if target_range <= orbits.outer0:
        return 0
    return max(1, int(np.ceil((target_range - orbits.outer0) / orbits.width - 1e-9)))


# ---------------------------------------------------------------------------
# Step bounds
# ---------------------------------------------------------------------------

class NeighborClearance:
    """
    Space around a robot that robot-signal readings prove to be empty.

    Reading z_l at sensor l means no robot center lies closer than
    inverse(z_l) to that sensor (a sum is at least its largest term). The
    union of those disks is free; the distance from a point to the nearest
    spot outside the union bounds how close any neighbor can be.
    """

    def __init__(self, robot_readings: np.ndarray, params: RobotParams):
        readings = np.asarray(robot_readings, dtype=float)
        self.sensed = bool(np.any(readings > 0.0))
        self.centers = params.sensors.sensor_positions(Pose(0.0, 0.0, 0.0))
        self.radii = np.atleast_1d(np.asarray(params.robot_profile.inverse(readings), dtype=float))
        self.required = (params.robot_safe + params.max_step) * params.sensing_margin
        self.vertices = self._uncovered_vertices()

    def _uncovered_vertices(self) -> np.ndarray:
        count = len(self.radii)
        if count < 2:
            return np.empty((0, 2))
        first, second = np.triu_indices(count, k=1)
        offset = self.centers[second] - self.centers[first]
        spacing = np.hypot(offset[:, 0], offset[:, 1])
        r1, r2 = self.radii[first], self.radii[second]
        with np.errstate(divide="ignore", invalid="ignore"):
            along = (r1 ** 2 - r2 ** 2 + spacing ** 2) / (2.0 * spacing)
            height_sq = r1 ** 2 - along ** 2
            valid = (spacing > 1e-12) & (height_sq >= 0.0)
            direction = offset / spacing[:, None]
        along, height = along[valid], np.sqrt(height_sq[valid])
        direction = direction[valid]
        base = self.centers[first[valid]] + along[:, None] * direction
        normal = np.stack([-direction[:, 1], direction[:, 0]], axis=1)
        points = np.concatenate([base + height[:, None] * normal, base - height[:, None] * normal])
        if len(points) == 0:
            return np.empty((0, 2))
        covered = (cdist(points, self.centers) < self.radii - 1e-9).any(axis=1)
        return points[~covered]

    def distance(self, points: np.ndarray) -> np.ndarray:
        """
        Distance from each point to the nearest location a neighbor could occupy.

        Args:
            points: Robot-frame positions, shape (n, 2)

        Returns:
            Shape (n,); 0 for points outside every free disk
        """
        points = np.atleast_2d(points)
        diff = points[:, None, :] - self.centers[None, :, :]
        norms = np.hypot(diff[..., 0], diff[..., 1])
        inside_any = (norms < self.radii).any(axis=1)

        safe_norms = np.where(norms > 1e-12, norms, 1.0)
        directions = np.where(norms[..., None] > 1e-12, diff / safe_norms[..., None], np.array([1.0, 0.0]))
        nearest_on_circle = self.centers[None, :, :] + self.radii[None, :, None] * directions
        gaps = nearest_on_circle[:, :, None, :] - self.centers[None, None, :, :]
        covered = np.hypot(gaps[..., 0], gaps[..., 1]) < self.radii[None, None, :] - 1e-9
        idx = np.arange(len(self.radii))
        covered[:, idx, idx] = False
        radial = np.where(covered.any(axis=2), np.inf, np.abs(self.radii - norms)).min(axis=1)

        if len(self.vertices):
            radial = np.minimum(radial, cdist(points, self.vertices).min(axis=1))
        return np.where(inside_any, radial, 0.0)

    def admits(self, points: np.ndarray) -> np.ndarray:
        if not self.sensed:
            return np.ones(len(points), dtype=bool)
        return self.distance(points) >= self.required


@dataclass(frozen=True)
class TargetView:
    """
    Where the target can be: bearings in ``los`` at range >= ``distance``.

    ``distance`` is the under-approximated center-to-target range.
    """
    distance: float
    sensor: int
    los: AngularInterval

    def clearance(self, points: np.ndarray) -> np.ndarray:
        return distance_to_sector(points, self.los, self.distance)


def _largest_feasible_step(
    theta,
    cap,
    tests: Sequence[Callable[[np.ndarray], np.ndarray]],
    samples: int = STEP_SAMPLES
) -> np.ndarray:
    """
    Largest step in {0, cap/(n-1), ..., cap} passing every test, per heading.

    Every returned step is checked exactly at its endpoint. Returns 0 when no
    positive candidate passes (standing still needs no check).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    cap = np.broadcast_to(np.asarray(cap, dtype=float), theta.shape)
    steps = cap[:, None] * np.linspace(0.0, 1.0, samples)[None, :]
    if not tests:
        return cap.copy()
    points = steps[..., None] * unit(theta)[:, None, :]
    flat = points.reshape(-1, 2)
    ok = np.ones(len(flat), dtype=bool)
    for test in tests:
        ok &= test(flat)
    ok = ok.reshape(steps.shape)
    ok[:, 0] = True
    return np.where(ok, steps, 0.0).max(axis=1)


def _scalar_or_array(values: np.ndarray, theta):
    return float(values[0]) if np.ndim(theta) == 0 else values


def dist_avo_rob(robot_readings: np.ndarray, theta, params: RobotParams):
    """
    Largest step along theta that keeps clear of every neighbor.

    A step is admissible when the new center is at least
    (robot_safe + max_step) * sensing_margin from every position a neighbor
    can occupy, so safety holds even if that neighbor also moves max_step.

    Args:
        robot_readings: Robot-signal readings Z_r, shape (p,)
        theta: Candidate heading(s) in the robot frame
        params: Robot parameters

    Returns:
        Step(s) in [0, max_step]; max_step when no robot is sensed
    """
    clearance = NeighborClearance(robot_readings, params)
    steps = _largest_feasible_step(theta, params.max_step, [clearance.admits] if clearance.sensed else [])
    return _scalar_or_array(steps, theta)


def observe_target(target_readings: np.ndarray, params: RobotParams) -> Optional[TargetView]:
    """Build the target view from target readings, or None when nothing is sensed."""
    readings = np.asarray(target_readings, dtype=float)
    silent = np.zeros_like(readings)
    estimate = infer_distance(ReadingSet(target=readings, robot=silent, environment=silent),
                              params.target_profile, params.sensors)
    if estimate is None:
        return None
    k = estimate.sensor
    p = params.sensors.count
    neighbors = (float(readings[(k - 1) % p]), float(readings[(k + 1) % p]))
    los = los_range(k, params.sensors, refined=params.refine_los and p > 1, neighbor_readings=neighbors)
    return TargetView(distance=estimate.distance, sensor=k, los=los)


def _target_test(view: TargetView, required: float) -> Callable[[np.ndarray], np.ndarray]:
    def test(points: np.ndarray) -> np.ndarray:
        return view.clearance(points) >= required
    return test


def _approach_requirement(view: TargetView, orbits: OrbitSet, target_step: float) -> float:
    return min(orbits.inner0 + target_step, view.distance)


def dist_avo_tar(
    target_readings: np.ndarray,
    theta,
    params: RobotParams,
    orbits: OrbitSet,
    target_step: Optional[float] = None
):
    """
    Largest step along theta that stays outside the target's keep-out ring.

    The target may sit anywhere in the line-of-sight sector beyond the
    inferred range and may then advance ``target_step`` toward the robot. The
    post-move distance to that sector must stay at least inner0 + target_step
    (capped at the current inferred range, so standing still always passes).

    Args:
        target_readings: Target-signal readings Z_g, shape (p,)
        theta: Candidate heading(s) in the robot frame
        params: Robot parameters
        orbits: Orbit set (inner0 is the keep-out radius)
        target_step: Target step to guard against; defaults to params.target_max_step

    Returns:
        Step(s) in [0, max_step]; max_step when no target is sensed
    """
    view = observe_target(target_readings, params)
    if view is None:
        steps = _largest_feasible_step(theta, params.max_step, [])
        return _scalar_or_array(steps, theta)
    step = params.target_max_step if target_step is None else target_step
    required = _approach_requirement(view, orbits, step)
    steps = _largest_feasible_step(theta, params.max_step, [_target_test(view, required)])
    return _scalar_or_array(steps, theta)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def _argmax_heading(
    ranges: List[Tuple[AngularInterval, int]],
    score: Callable[[np.ndarray], np.ndarray],
    count: int,
    preferred_rotation: Optional[int] = None
) -> Tuple[float, float, int]:
    """
    Discretized argmax of ``score`` over one or more angular ranges.

    Ties (within SAFETY_TOLERANCE) go to the preferred rotation, then to the
    heading closest to its range midpoint, then to the lowest candidate index.

    Returns:
        (heading, best score, rotation label of the winning range)
    """
    thetas, labels, offsets = [], [], []
    for interval, label in ranges:
        samples = interval.samples(count)
        thetas.append(samples)
        labels.append(np.full(len(samples), label))
        offsets.append(np.abs(samples - interval.midpoint))
    thetas = np.concatenate(thetas)
    labels = np.concatenate(labels)
    offsets = np.concatenate(offsets)

    values = np.asarray(score(thetas), dtype=float)
    best = float(values.max())
    tied = np.flatnonzero(values >= best - SAFETY_TOLERANCE)
    preference = np.zeros(len(tied)) if preferred_rotation is None else (labels[tied] != preferred_rotation).astype(float)
    order = np.lexsort((tied, offsets[tied], preference))
    winner = tied[order[0]]
    return float(np.mod(thetas[winner], TWO_PI)), best, int(labels[winner])


def _min_signal_heading(robot_readings: np.ndarray, sensors: SensorArray, rng: np.random.Generator) -> float:
    lowest = np.flatnonzero(robot_readings <= robot_readings.min())
    choice = int(lowest[0]) if len(lowest) == 1 else int(rng.choice(lowest))
    return sensors.angles[choice]


def control_step(
    readings: ReadingSet,
    params: RobotParams,
    orbits: OrbitSet,
    rng: np.random.Generator
) -> ControlOutput:
    """
    Choose (theta_r, d_r) for one robot from its current readings.

    Dispatch order: boundary avoidance, random walk when no target is sensed,
    target avoidance inside the keep-out ring, tangential motion in the
    primary orbit, and approach from secondary orbits with tangent and
    minimum-signal fallbacks.

    Args:
        readings: Current sensor readings
        params: Robot parameters
        orbits: Orbit set (inner0 already inflated for noise)
        rng: This robot's random stream for the step

    Returns:
        ControlOutput with 0 <= step <= params.max_step
    """
    sensors = params.sensors
    count = params.argmax_candidates
    d_max = params.max_step
    z_r = np.asarray(readings.robot, dtype=float)

    neighbors = NeighborClearance(z_r, params)
    robot_tests = [neighbors.admits] if neighbors.sensed else []

    def rob(theta):
        return _largest_feasible_step(theta, d_max, robot_tests)

    view = observe_target(readings.target, params)
    hard_tests: List[Callable[[np.ndarray], np.ndarray]] = []
    target_range, orbit = None, None
    if view is not None:
        target_range = view.distance
        orbit = current_orbit(view.distance, orbits)
        hard_tests = [_target_test(view, min(orbits.inner0, view.distance))]

    def final_step(theta: float, cap: float = d_max) -> float:
        return float(_largest_feasible_step(theta, min(cap, d_max), robot_tests + hard_tests)[0])

    def output(theta: float, step: float, behavior: Behavior) -> ControlOutput:
        return ControlOutput(float(np.mod(theta, TWO_PI)), float(step), behavior, target_range, orbit)

    def min_signal() -> ControlOutput:
        theta = _min_signal_heading(z_r, sensors, rng)
        return output(theta, final_step(theta), Behavior.MIN_SIGNAL_FALLBACK)

    # Boundary too close
    boundary = infer_distance(readings, params.environment_profile, sensors)
    trigger = (params.environment_safe + d_max) * params.sensing_margin
    if boundary is not None and boundary.distance <= trigger:
        theta, _, _ = _argmax_heading([(avoid_range(boundary.sensor, sensors), 0)], rob, count)
        return output(theta, final_step(theta), Behavior.AVOID_BOUNDARY)

    # Nothing to chase
    if view is None:
        theta = float(rng.uniform(0.0, TWO_PI))
        step = final_step(theta)
        if step > 0.0:
            return output(theta, step, Behavior.RANDOM_WALK)
        return min_signal()

    # Inside the keep-out ring
    if orbit == INSIDE:
        away = avoid_range(view.sensor, sensors, view.los)
        theta, _, _ = _argmax_heading([(away, 0)], rob, count)
        cap = abs(view.distance - orbits.inner0)
        return output(theta, final_step(theta, cap), Behavior.AVOID_TARGET)

    approach_test = _target_test(view, _approach_requirement(view, orbits, params.target_max_step))

    def rob_and_tar(theta):
        return _largest_feasible_step(theta, d_max, robot_tests + [approach_test])

    def rob_and_hard(theta):
        return _largest_feasible_step(theta, d_max, robot_tests + hard_tests)

    clockwise, counter_clockwise = tangent_ranges(view.sensor, sensors, view.los)
    tangents = [(clockwise, -1), (counter_clockwise, 1)]

    # Primary orbit: circulate
    if orbit == 0 and not params.baseline_mode:
        theta, best, _ = _argmax_heading(tangents, rob_and_tar, count, orbits.rotation(0))
        if best > 0.0:
            return output(theta, final_step(theta, best), Behavior.ORBIT_TANGENT)

    # Secondary orbits, the baseline and a blocked primary orbit: approach
    theta, best, _ = _argmax_heading([(view.los, 0)], rob_and_tar, count)
    if best > 0.0:
        return output(theta, final_step(theta, best), Behavior.APPROACH_TARGET)

    if orbit > 0:
        theta, best, _ = _argmax_heading([(view.los, 0)], rob_and_hard, count)
        if best > 0.0:
            return output(theta, final_step(theta), Behavior.APPROACH_TARGET)

    if not params.baseline_mode:
        theta, best, _ = _argmax_heading(tangents, rob_and_hard, count, orbits.rotation(orbit))
        if best > 0.0:
            return output(theta, final_step(theta), Behavior.TANGENT_FALLBACK)

    return min_signal()
