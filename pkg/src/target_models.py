"""
Target kinematics under the three motion models, escape headings and the
capture shut-off.

Targets turn then move, like robots. A random target wanders; an escaping
target flees at full speed once a robot enters its escape domain; a pattern
target cruises along a constant-velocity, circular or waypoint path and flees
the same way.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import FrozenSet, Iterable, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from config import RESAMPLE_ATTEMPTS
from src.environment import Environment
from src.geometry import TWO_PI, unit, wrap_angle, wrap_to_pi
from utils import logger

# Headings examined when no heading moves away from every intruder
ESCAPE_GRID = 720


class MotionVariant(str, Enum):
    """Target motion models."""
    RANDOM = "random"
    RANDOM_ESCAPE = "random_escape"
    PATTERN_ESCAPE = "pattern_escape"


class PatternKind(str, Enum):
    """Cruise patterns for pattern-with-escape targets."""
    CONSTANT_VELOCITY = "constant_velocity"
    CIRCLE = "circle"
    WAYPOINTS = "waypoints"


@dataclass(frozen=True)
class MotionModel:
    """Motion model of one target, with pattern parameters for the pattern variant."""
    variant: MotionVariant = MotionVariant.RANDOM_ESCAPE
    pattern: PatternKind = PatternKind.CONSTANT_VELOCITY
    cruise_step: float = 0.0
    turn_radius: float = 0.0
    waypoints: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.cruise_step < 0:
            raise ValueError(f"Cruise step must be non-negative, got {self.cruise_step}")
        if self.variant == MotionVariant.PATTERN_ESCAPE:
            if self.pattern == PatternKind.CIRCLE and self.turn_radius <= 0:
                raise ValueError("A circle pattern needs a positive turn radius")
            if self.pattern == PatternKind.WAYPOINTS and not self.waypoints:
                raise ValueError("A waypoint pattern needs at least one waypoint")

    @property
    def escapes(self) -> bool:
        return self.variant != MotionVariant.RANDOM


@dataclass(frozen=True)
class TargetState:
    """One target at one timestep."""
    position: Tuple[float, float]
    heading: float
    radius: float
    max_step: float
    escape_radius: float
    captured: bool = False
    waypoint_index: int = 0

    @property
    def center(self) -> np.ndarray:
        return np.array(self.position, dtype=float)


@dataclass(frozen=True, eq=False)
class TargetSurroundings:
    """
    What a target needs to know about the world snapshot.

    Attributes:
        environment: The arena
        robot_positions: All robot centers, shape (n, 2)
        other_targets: Centers of the other live targets, shape (m, 2)
        boundary_margin: Minimum center-to-boundary distance for targets
        target_spacing: Minimum center-to-center distance between targets
    """
    environment: Environment
    robot_positions: np.ndarray
    other_targets: np.ndarray
    boundary_margin: float
    target_spacing: float

    def admits(self, current: np.ndarray, proposed: np.ndarray) -> bool:
        """True when a proposed center respects the boundary margin and target spacing."""
        if self.environment.distance_to_boundary(proposed) < self.boundary_margin:
            return False
        if len(self.other_targets):
            after = np.hypot(*(self.other_targets - proposed).T)
            before = np.hypot(*(self.other_targets - current).T)
            # A pair already too close may only separate
            if np.any((after <= self.target_spacing) & (after < before)):
                return False
        return True


class TargetMove(NamedTuple):
    """Result of one target decision: turn, step, new heading and pattern state."""
    turn: float
    step: float
    heading: float
    escaping: bool
    waypoint_index: int


@dataclass(frozen=True)
class EncapsulationRing:
    """The annulus (safe_radius, outer_radius] and the robot count that captures a target."""
    safe_radius: float
    outer_radius: float
    robots_required: int


def intruders_of(target: TargetState, robot_positions: np.ndarray) -> np.ndarray:
    """Robot centers inside the target's escape domain."""
    robots = np.asarray(robot_positions, dtype=float).reshape(-1, 2)
    if len(robots) == 0:
        return robots
    distance = np.hypot(*(robots - target.center).T)
    return robots[distance <= target.escape_radius]


def escape_arc(center: np.ndarray, intruders: np.ndarray) -> Optional[Tuple[float, float]]:
    """
    Headings pointing away from every intruder (open half-planes intersected).

    Returns:
        (lo, hi) with lo < hi, unwrapped, or None when the intersection is empty
    """
    offsets = np.asarray(center, dtype=float) - np.atleast_2d(intruders)
    away = np.arctan2(offsets[:, 1], offsets[:, 0])
    relative = wrap_to_pi(away - away[0])
    relative = np.atleast_1d(relative)
    lo = float(np.max(relative)) - np.pi / 2
    hi = float(np.min(relative)) + np.pi / 2
    if hi <= lo:
        return None
    return away[0] + lo, away[0] + hi


def _min_distance_after(center: np.ndarray, intruders: np.ndarray, step: float, headings) -> np.ndarray:
    moved = center + step * unit(np.atleast_1d(headings))
    gaps = moved[:, None, :] - intruders[None, :, :]
    return np.hypot(gaps[..., 0], gaps[..., 1]).min(axis=1)


def _max_min_heading(center: np.ndarray, intruders: np.ndarray, step: float) -> float:
    grid = np.linspace(0.0, TWO_PI, ESCAPE_GRID, endpoint=False)
    scores = _min_distance_after(center, intruders, step, grid)
    best = int(np.argmax(scores))
    spacing = TWO_PI / ESCAPE_GRID
    result = minimize_scalar(
        lambda psi: -float(_min_distance_after(center, intruders, step, psi)[0]),
        bounds=(grid[best] - spacing, grid[best] + spacing),
        method="bounded",
    )
    refined = float(result.x)
    if -result.fun >= scores[best]:
        return float(wrap_angle(refined))
    return float(grid[best])


def escape_heading(
    target: TargetState,
    intruders: np.ndarray,
    rng: np.random.Generator
) -> float:
    """
    Heading for a target fleeing the robots in its escape domain.

    Samples uniformly from the headings that increase the distance to every
    intruder; when none exists, returns the heading that maximizes the minimum
    post-move distance.

    Args:
        target: The fleeing target
        intruders: Robot centers within the escape radius, shape (k, 2)
        rng: Target random stream

    Returns:
        Heading in [0, 2*pi)

    Raises:
        ValueError: If there are no intruders
    """
    intruders = np.asarray(intruders, dtype=float).reshape(-1, 2)
    if len(intruders) == 0:
        raise ValueError("escape_heading needs at least one intruder")
    arc = escape_arc(target.center, intruders)
    if arc is not None:
        return float(wrap_angle(rng.uniform(arc[0], arc[1])))
    return _max_min_heading(target.center, intruders, max(target.max_step, 1e-9))


def _move(target: TargetState, heading: float, step: float, escaping: bool, waypoint_index: Optional[int] = None) -> TargetMove:
    index = target.waypoint_index if waypoint_index is None else waypoint_index
    return TargetMove(
        turn=float(wrap_to_pi(heading - target.heading)),
        step=float(step),
        heading=float(wrap_angle(heading)),
        escaping=escaping,
        waypoint_index=index,
    )


def _proposal(target: TargetState, heading: float, step: float) -> np.ndarray:
    return target.center + step * unit(heading)


def _random_move(target: TargetState, surroundings: TargetSurroundings, rng: np.random.Generator) -> TargetMove:
    heading = target.heading
    for _ in range(RESAMPLE_ATTEMPTS):
        heading = float(rng.uniform(0.0, TWO_PI))
        step = float(rng.uniform(0.0, target.max_step))
        if surroundings.admits(target.center, _proposal(target, heading, step)):
            return _move(target, heading, step, False)

    reflected = surroundings.environment.reflect_heading(target.center, heading)
    step = float(rng.uniform(0.0, target.max_step))
    if surroundings.admits(target.center, _proposal(target, reflected, step)):
        return _move(target, reflected, step, False)
    logger.debug("Random target found no admissible move; holding position")
    return _move(target, reflected, 0.0, False)


def _escape_move(
    target: TargetState,
    intruders: np.ndarray,
    surroundings: TargetSurroundings,
    rng: np.random.Generator
) -> TargetMove:
    step = target.max_step
    arc = escape_arc(target.center, intruders)
    if arc is not None:
        for _ in range(RESAMPLE_ATTEMPTS):
            heading = float(rng.uniform(arc[0], arc[1]))
            if surroundings.admits(target.center, _proposal(target, heading, step)):
                return _move(target, heading, step, True)
    else:
        heading = _max_min_heading(target.center, intruders, max(step, 1e-9))
        if surroundings.admits(target.center, _proposal(target, heading, step)):
            return _move(target, heading, step, True)

    # Best admissible heading by max-min distance
    grid = np.linspace(0.0, TWO_PI, ESCAPE_GRID, endpoint=False)
    scores = _min_distance_after(target.center, intruders, step, grid)
    for index in np.argsort(-scores, kind="stable"):
        heading = float(grid[index])
        if surroundings.admits(target.center, _proposal(target, heading, step)):
            return _move(target, heading, step, True)
    return _move(target, target.heading, 0.0, True)


def _pattern_move(target: TargetState, model: MotionModel, surroundings: TargetSurroundings) -> TargetMove:
    cruise = model.cruise_step
    index = target.waypoint_index

    if model.pattern == PatternKind.WAYPOINTS:
        waypoint = np.asarray(model.waypoints[index % len(model.waypoints)], dtype=float)
        offset = waypoint - target.center
        remaining = float(np.hypot(offset[0], offset[1]))
        if remaining <= cruise:
            index = (index + 1) % len(model.waypoints)
        if remaining < 1e-12:
            return _move(target, target.heading, 0.0, False, index)
        heading = float(np.arctan2(offset[1], offset[0]))
        step = min(cruise, remaining)
        if surroundings.admits(target.center, _proposal(target, heading, step)):
            return _move(target, heading, step, False, index)
        return _move(target, heading, 0.0, False, target.waypoint_index)

    heading = target.heading
    if model.pattern == PatternKind.CIRCLE:
        heading = heading + cruise / model.turn_radius
    if surroundings.admits(target.center, _proposal(target, heading, cruise)):
        return _move(target, heading, cruise, False)
    reflected = surroundings.environment.reflect_heading(target.center, heading)
    if surroundings.admits(target.center, _proposal(target, reflected, cruise)):
        return _move(target, reflected, cruise, False)
    return _move(target, reflected, 0.0, False)


def target_step(
    target: TargetState,
    model: MotionModel,
    surroundings: TargetSurroundings,
    rng: np.random.Generator
) -> TargetMove:
    """
    Decide one target's turn and step against the timestep snapshot.

    Random targets draw a uniform heading and a uniform step in [0, max_step],
    resampling (then reflecting) until the boundary margin and target spacing
    hold. Escaping variants flee at max_step whenever a robot is inside the
    escape radius. Pattern targets otherwise follow their cruise pattern.

    Args:
        target: Current target state
        model: Its motion model
        surroundings: Snapshot information
        rng: Target random stream for this step

    Returns:
        TargetMove; captured targets never move
    """
    if target.captured:
        return _move(target, target.heading, 0.0, False)

    if model.escapes:
        intruders = intruders_of(target, surroundings.robot_positions)
        if len(intruders):
            return _escape_move(target, intruders, surroundings, rng)

    if model.variant == MotionVariant.PATTERN_ESCAPE:
        return _pattern_move(target, model, surroundings)
    return _random_move(target, surroundings, rng)


def apply_move(target: TargetState, move: TargetMove) -> TargetState:
    """Turn then move: the new heading first, then a step along it."""
    position = target.center + move.step * unit(move.heading)
    return replace(
        target,
        position=(float(position[0]), float(position[1])),
        heading=move.heading,
        waypoint_index=move.waypoint_index,
    )


def on_capture(
    target: TargetState,
    robot_positions: np.ndarray,
    frozen: Iterable[int],
    ring: EncapsulationRing
) -> Tuple[TargetState, FrozenSet[int]]:
    """
    Apply the shut-off burst for a captured target.

    Marks the target captured and freezes every robot inside its encapsulation
    ring. Robots outside the ring are unaffected. Capturing an already
    captured target changes nothing.

    Args:
        target: Target being captured
        robot_positions: All robot centers, shape (n, 2)
        frozen: Indices of robots already frozen
        ring: The target's encapsulation ring

    Returns:
        (captured target, updated frozen robot indices)
    """
    frozen = frozenset(frozen)
    if target.captured:
        return target, frozen
    robots = np.asarray(robot_positions, dtype=float).reshape(-1, 2)
    if len(robots):
        distance = np.hypot(*(robots - target.center).T)
        members = np.flatnonzero((distance > ring.safe_radius) & (distance <= ring.outer_radius))
        frozen = frozen | frozenset(int(i) for i in members)
    return replace(target, captured=True), frozen
