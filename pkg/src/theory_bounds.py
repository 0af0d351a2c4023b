"""
Closed-form parameter bounds, the whole-configuration feasibility check and
empirical drift diagnostics.

The bounds tie the robot step, the robot influence radius, the orbit radii and
the admissible target/robot step-size ratio (lambda) to the sensor
resolution. ``validate_config`` evaluates all of them for one experiment
config; ``derive_parameters`` fits a config to them; ``drift_diagnostics``
measures the Lyapunov drift and the relative line-of-sight motion from a trace.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from config import DRIFT_MIN_SAMPLES
from src.experiment_config import ExperimentConfig, with_overrides
from src.geometry import unit
from src.robot_controller import Behavior
from src.target_models import MotionVariant
from utils import logger

# Added to fitted radii so fitted configs pass strict inequalities with room to spare
FIT_CLEARANCE = 0.05


class InfeasibleConfigError(ValueError):
    """Raised when a bound's precondition fails or a strict validation finds violations."""
    pass


def _half_angle(p: Optional[int], half_angle: Optional[float]) -> float:
    if half_angle is not None:
        return float(half_angle)
    if p is None:
        raise ValueError("Either a sensor count or a half-angle is required")
    return math.pi / p


def _sensor_chord(distance: float, radius: float, half_angle: float) -> float:
    """Worst sensor-to-source distance for a source at ``distance`` from the center."""
    return math.sqrt(max(distance ** 2 + radius ** 2 - 2 * radius * distance * math.cos(half_angle), 0.0))


def drive_factor(half_angle: float) -> float:
    """Mean forward progress of a heading drawn uniformly from a cone of half-width phi: sin(phi)/phi."""
    if half_angle < 1e-12:
        return 1.0
    return math.sin(half_angle) / half_angle


# ---------------------------------------------------------------------------
# Collision avoidance and ring geometry
# ---------------------------------------------------------------------------

def max_robot_step(robot_safe: float, radius: float, p: Optional[int] = None, half_angle: Optional[float] = None) -> float:
    """
    Strict upper bound on the robot step that rules out two-robot deadlock.

    d_r < (rs + r cos(phi))/2 - sqrt(rs^2 + r^2 - 2 r rs cos(phi))/2

    Args:
        robot_safe: Robot-robot safe distance r_r^safe
        radius: Robot radius r_r
        p: Sensor count (phi = pi/p)
        half_angle: Explicit half-angle for asymmetric arrays

    Returns:
        The bound (the step itself must be strictly smaller)

    Raises:
        InfeasibleConfigError: If fewer than three sensors are given
    """
    if p is not None and p < 3:
        raise InfeasibleConfigError(f"At least three sensors are required, got {p}")
    phi = _half_angle(p, half_angle)
    if phi >= math.pi / 3 + 1e-12 and half_angle is not None and p is None:
        logger.debug(f"Half-angle {phi:.4f} is coarser than a three-sensor array")
    if robot_safe <= 2 * radius:
        logger.warning(f"Robot safe distance {robot_safe} leaves no body clearance at radius {radius} (degenerate margin)")
    return (robot_safe + radius * math.cos(phi)) / 2 - _sensor_chord(robot_safe, radius, phi) / 2


def _beta_bounds(robot_safe: float, radius: float, phi: float, max_step: float) -> Tuple[float, float]:
    return _sensor_chord(robot_safe, radius, phi) + 2 * max_step, robot_safe + radius * math.cos(phi)


def beta_r_interval(
    robot_safe: float,
    radius: float,
    p: Optional[int],
    max_step: float,
    half_angle: Optional[float] = None
) -> Tuple[float, float]:
    """
    Open interval of robot influence radii that keeps two robots from deadlocking.

    sqrt(rs^2 + r^2 - 2 r rs cos(phi)) + 2 d_r < beta_r < rs + r cos(phi)

    Raises:
        InfeasibleConfigError: If the interval is empty
    """
    lo, hi = _beta_bounds(robot_safe, radius, _half_angle(p, half_angle), max_step)
    if lo >= hi:
        raise InfeasibleConfigError(
            f"No admissible robot influence radius: lower bound {lo:.5f} >= upper bound {hi:.5f}"
        )
    return lo, hi


def min_encap_radius(inner: float, radius: float, p: Optional[int], max_step: float, half_angle: Optional[float] = None) -> float:
    """
    Smallest encapsulation radius that contains a robot with the worst target estimate.

    d_r + r_r + sqrt(Or^2 + r_r^2 - 2 r_r Or cos(phi))
    """
    phi = _half_angle(p, half_angle)
    return max_step + radius + _sensor_chord(inner, radius, phi)


class RingCapacity(NamedTuple):
    """Robots placeable around a ring without mutual repulsion, real-valued and floored."""
    value: float
    floor: int


def _chord_angle(chord: float, ring_radius: float) -> float:
    argument = 1.0 - chord ** 2 / (2.0 * ring_radius ** 2)
    if argument < -1.0 - 1e-12 or argument > 1.0:
        raise InfeasibleConfigError(
            f"Chord {chord:.5f} does not fit a ring of radius {ring_radius:.5f}"
        )
    return math.acos(max(argument, -1.0))


def max_ring_robots(beta_r: float, radius: float, encap_radius: float) -> RingCapacity:
    """
    Ring capacity n0 = 2*pi / arccos(1 - (beta_r + r_r)^2 / (2 R^2)).

    Raises:
        InfeasibleConfigError: If (beta_r + r_r) > 2R
    """
    if encap_radius <= 0 or beta_r + radius > 2 * encap_radius:
        raise InfeasibleConfigError(
            f"Ring of radius {encap_radius} cannot hold chord beta_r + r_r = {beta_r + radius}"
        )
    value = 2 * math.pi / _chord_angle(beta_r + radius, encap_radius)
    return RingCapacity(value=value, floor=int(math.floor(value + 1e-9)))


# ---------------------------------------------------------------------------
# Step-size ratios
# ---------------------------------------------------------------------------

class StepRatio(NamedTuple):
    """lambda = min(tangential, radial) with both unminimized factors."""
    value: float
    tangential: float
    radial: float


def alpha_angle(beta_r: float, radius: float, escape_radius: float) -> float:
    """
    Angle subtended at a target by two dispersed ring robots.

    alpha = arccos(1 - (beta_r + r_r)^2 / (2 r_escape^2)), clamped to (0, pi].

    Raises:
        InfeasibleConfigError: If beta_r + r_r > 2 r_escape
    """
    chord = beta_r + radius
    if escape_radius <= 0 or chord > 2 * escape_radius + 1e-12:
        raise InfeasibleConfigError(
            f"Escape radius {escape_radius} is too small for chord beta_r + r_r = {chord}"
        )
    argument = 1.0 - chord ** 2 / (2.0 * escape_radius ** 2)
    if argument < -1.0:
        logger.warning(f"Clamping alpha to pi (cosine argument {argument:.3g})")
        argument = -1.0
    return math.acos(argument)


def lambda_escape(half_angle: float, alpha: float) -> StepRatio:
    """
    Admissible step ratio for a target that escapes intruders.

    lambda = min(pi/2, alpha / sin(pi - alpha)) * (sin(phi)/phi) * cos(phi)

    Returns:
        StepRatio; zero everywhere when phi >= pi/2 (fewer than three sensors)
    """
    if half_angle >= math.pi / 2:
        logger.debug(f"Half-angle {half_angle:.4f} >= pi/2: no admissible step ratio")
        return StepRatio(0.0, 0.0, 0.0)
    base = drive_factor(half_angle) * math.cos(half_angle)
    dispersion = math.sin(math.pi - alpha)
    tangential = math.inf if dispersion < 1e-15 else alpha / dispersion * base
    radial = math.pi / 2 * base
    return StepRatio(value=min(tangential, radial), tangential=tangential, radial=radial)


def lambda_random(n: int, beta_r: float, radius: float, inner: float) -> float:
    """
    Admissible step ratio for a randomly moving target.

    lambda = 1 / (n - floor(2*pi / arccos(1 - (beta_r + r_r)^2 / (2 Or^2))) + 1),
    and 1 when the swarm is no larger than that floor.

    Raises:
        InfeasibleConfigError: If the arccos argument leaves [-1, 1]
    """
    idle = int(math.floor(2 * math.pi / _chord_angle(beta_r + radius, inner) + 1e-9))
    if n <= idle:
        return 1.0
    return 1.0 / (n - idle + 1)


def lambda_pattern(half_angle: float, alpha: float) -> Tuple[float, StepRatio]:
    """
    Step ratios for a pattern target: (cruise bound, escape bound).

    The cruise bound (sin(phi)/phi) cos(phi) is strict.
    """
    if half_angle >= math.pi / 2:
        return 0.0, StepRatio(0.0, 0.0, 0.0)
    return drive_factor(half_angle) * math.cos(half_angle), lambda_escape(half_angle, alpha)


def lambda_surface(sensor_counts: Sequence[int], alphas: Sequence[float]) -> np.ndarray:
    """Escape step ratio over a (sensor count, alpha) grid, shape (len(counts), len(alphas))."""
    surface = np.zeros((len(sensor_counts), len(alphas)))
    for i, p in enumerate(sensor_counts):
        for j, alpha in enumerate(alphas):
            surface[i, j] = lambda_escape(math.pi / p, alpha).value if p > 0 else 0.0
    return surface


def escape_bound_table(
    sensor_counts: Sequence[int],
    escape_radii: Sequence[float],
    robot_safe: float = 3.0,
    radius: float = 1.0,
    margin: float = 0.95
) -> List[Dict[str, float]]:
    """
    Escape step ratio versus escape radius for several sensor counts.

    For each count the robot step is fitted at ``margin`` of its deadlock bound
    and beta_r at the middle of its admissible interval.

    Returns:
        Rows with sensors, escape_radius, beta_r, alpha, lambda, tangential, radial
    """
    rows = []
    for p in sensor_counts:
        if p < 3:
            for escape in escape_radii:
                rows.append({"sensors": p, "escape_radius": escape, "beta_r": math.nan,
                             "alpha": math.nan, "lambda": 0.0, "tangential": 0.0, "radial": 0.0})
            continue
        step = margin * max_robot_step(robot_safe, radius, p)
        lo, hi = beta_r_interval(robot_safe, radius, p, step)
        beta_r = 0.5 * (lo + hi)
        for escape in escape_radii:
            try:
                alpha = alpha_angle(beta_r, radius, escape)
            except InfeasibleConfigError:
                alpha = math.pi
            ratio = lambda_escape(math.pi / p, alpha)
            rows.append({"sensors": p, "escape_radius": escape, "beta_r": beta_r, "alpha": alpha,
                         "lambda": ratio.value, "tangential": ratio.tangential, "radial": ratio.radial})
    return rows


# ---------------------------------------------------------------------------
# Feasibility report
# ---------------------------------------------------------------------------

@dataclass
class FeasibilityCheck:
    """One bound evaluated against the configured value."""
    name: str
    formula: str
    bound: Optional[float]
    configured: Optional[float]
    passed: bool
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "formula": self.formula,
            "bound": self.bound,
            "configured": self.configured,
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass
class FeasibilityReport:
    """All checks for one config; the config passes when every check passes."""
    config_name: str
    config_hash: str
    checks: List[FeasibilityCheck] = field(default_factory=list)
    advisories: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[FeasibilityCheck]:
        return [check for check in self.checks if not check.passed]

    def check(self, name: str) -> FeasibilityCheck:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)

    def add(self, name: str, formula: str, bound, configured, passed: bool, detail: str = "") -> None:
        self.checks.append(FeasibilityCheck(
            name, formula,
            None if bound is None else float(bound),
            None if configured is None else float(configured),
            bool(passed), detail,
        ))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config_name,
            "config_hash": self.config_hash,
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
            "advisories": list(self.advisories),
        }

    def format_text(self) -> str:
        lines = [f"Feasibility report for '{self.config_name}' ({self.config_hash[:12]})"]
        for check in self.checks:
            mark = "PASS" if check.passed else "FAIL"
            bound = "-" if check.bound is None else f"{check.bound:.6g}"
            configured = "-" if check.configured is None else f"{check.configured:.6g}"
            line = f"  [{mark}] {check.name:<24} bound={bound:<12} configured={configured:<12} {check.formula}"
            if check.detail:
                line += f"  ({check.detail})"
            lines.append(line)
        for advisory in self.advisories:
            lines.append(f"  advisory: {advisory}")
        lines.append(f"Overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _target_alpha(config: ExperimentConfig, escape_radius: float) -> Optional[float]:
    try:
        return alpha_angle(config.signals.robot.influence, config.robots.radius, escape_radius)
    except InfeasibleConfigError:
        return None


def validate_config(config: ExperimentConfig, strict: bool = False) -> FeasibilityReport:
    """
    Evaluate every bound for a config.

    Failures are collected, not raised, unless ``strict`` is set.

    Args:
        config: Experiment config
        strict: Raise InfeasibleConfigError when any check fails

    Returns:
        FeasibilityReport
    """
    robots = config.robots
    report = FeasibilityReport(config.name, config.digest)
    sensors = config.sensor_array
    p = sensors.count
    phi = sensors.half_angle
    mount = sensors.mount_radius
    r = robots.radius
    d_r = robots.max_step
    beta_g = config.signals.target.influence
    beta_r = config.signals.robot.influence
    beta_e = config.signals.environment.influence
    inner = config.orbits.inner
    encap = config.encapsulation.radius
    n_g = config.encapsulation.robots_required
    d_g = config.max_target_step

    report.add("sensor-count", "p >= 3", 3, p, p >= 3)
    report.add("robot-safe-distance", "r_r^safe > 2 r_r", 2 * r, robots.robot_safe, robots.robot_safe > 2 * r)

    # Sensing coverage at the safe distances
    report.add("coverage-target", "sqrt(rs^2 + m^2 - 2 m rs cos(phi)) < beta_g",
               _sensor_chord(robots.target_safe, mount, phi), beta_g,
               _sensor_chord(robots.target_safe, mount, phi) < beta_g)
    report.add("coverage-robot", "sqrt(rs^2 + m^2 - 2 m rs cos(phi)) < beta_r",
               _sensor_chord(robots.robot_safe, mount, phi), beta_r,
               _sensor_chord(robots.robot_safe, mount, phi) < beta_r)
    boundary_reach = robots.environment_safe + d_r - mount * math.cos(phi)
    report.add("coverage-environment", "(r_e^safe + d_r) - m cos(phi) < beta_e",
               boundary_reach, beta_e, boundary_reach < beta_e)
    orbit_reach = _sensor_chord(encap, mount, phi)
    report.add("orbit-sensing", "sqrt(R^2 + m^2 - 2 m R cos(phi)) < beta_g", orbit_reach, beta_g, orbit_reach < beta_g)

    # Target placement
    spacing = config.target_spacing
    centers = [t.center for t in config.targets if t.center is not None]
    closest = min(
        (math.dist(a, b) for i, a in enumerate(centers) for b in centers[i + 1:]),
        default=None,
    )
    report.add("target-spacing", "|c_g - c_g'| > 2 beta_g + 2 r_r", spacing, closest,
               closest is None or closest > spacing,
               "" if closest is not None else "enforced at placement")
    environment = config.environment.build()
    margin = config.target_boundary_margin
    x0, y0, x1, y1 = environment.bounds
    room = min(x1 - x0, y1 - y0) / 2
    boundary_ok = room > margin and all(environment.distance_to_boundary(c) >= margin for c in centers)
    report.add("boundary-margin", "boundary distance >= r_g^encap + r_e^safe + d_r", margin,
               min((environment.distance_to_boundary(c) for c in centers), default=room), boundary_ok)

    # Collision avoidance between robots
    if p >= 3:
        step_bound = max_robot_step(robots.robot_safe, r, half_angle=phi)
        report.add("robot-step", "d_r < (rs + r cos(phi))/2 - sqrt(rs^2 + r^2 - 2 r rs cos(phi))/2",
                   step_bound, d_r, d_r < step_bound)
    else:
        report.add("robot-step", "requires p >= 3", None, d_r, False, "fewer than three sensors")
    lo, hi = _beta_bounds(robots.robot_safe, r, phi, d_r)
    report.add("robot-influence", "sqrt(rs^2 + r^2 - 2 r rs cos(phi)) + 2 d_r < beta_r < rs + r cos(phi)",
               lo, beta_r, lo < beta_r < hi, f"upper bound {hi:.6g}")

    # Orbits and encapsulation ring
    required_inner = robots.target_safe + max(d_g, d_r)
    report.add("inner-orbit", "Or_inner >= r_g^safe + max(d_g, d_r)", required_inner, inner, inner >= required_inner)
    required_encap = min_encap_radius(inner, r, None, d_r, half_angle=phi)
    report.add("encapsulation-radius", "r_encap >= d_r + r_r + sqrt(Or^2 + r_r^2 - 2 r_r Or cos(phi))",
               required_encap, encap, encap >= required_encap)
    try:
        capacity = max_ring_robots(beta_r, r, encap)
        ring_ok = n_g <= capacity.floor
        report.add("ring-capacity", "n_g <= 2 pi / arccos(1 - (beta_r + r_r)^2 / (2 R^2))",
                   capacity.value, n_g, ring_ok)
        if not ring_ok:
            report.advisories.append(
                f"n_g = {n_g} exceeds the ring capacity {capacity.floor}: robots will keep displacing "
                f"each other in a dynamic equilibrium around the target instead of settling"
            )
    except InfeasibleConfigError as e:
        report.add("ring-capacity", "(beta_r + r_r) <= 2 R", 2 * encap, beta_r + r, False, str(e))
    report.add("orbit-width", "w < beta_r", beta_r, config.orbits.width, config.orbits.width < beta_r)
    noisy_inner = inner * config.noise.inflation
    report.add("noise-inner-ring", "Or_inner (1 + c sigma) < r_encap", encap, noisy_inner, noisy_inner < encap)
    total_required = n_g * len(config.targets)
    report.add("swarm-size", "n >= sum of n_g", total_required, robots.count, robots.count >= total_required)

    # Target step-size ratios
    for index, target in enumerate(config.targets):
        prefix = f"target[{index}]"
        variant = MotionVariant(target.motion.model)
        if variant != MotionVariant.RANDOM:
            need = robots.target_safe + target.max_step
            report.add(f"{prefix}.escape-radius", "r_escape >= r_g^safe + d_g", need, target.escape_radius,
                       target.escape_radius >= need)
        if target.max_step == 0 and variant != MotionVariant.PATTERN_ESCAPE:
            report.add(f"{prefix}.step-ratio", "static target", 0.0, 0.0, True)
            continue
        if variant == MotionVariant.RANDOM:
            try:
                ratio = lambda_random(robots.count, beta_r, r, inner)
                report.add(f"{prefix}.step-ratio", "d_g <= d_r / (n - n0~ + 1)", ratio * d_r, target.max_step,
                           target.max_step <= ratio * d_r)
            except InfeasibleConfigError as e:
                report.add(f"{prefix}.step-ratio", "random-target ratio", None, target.max_step, False, str(e))
            continue
        alpha = _target_alpha(config, target.escape_radius)
        if alpha is None:
            report.add(f"{prefix}.step-ratio", "(beta_r + r_r) <= 2 r_escape", None, target.max_step, False,
                       "escape radius too small for alpha")
            continue
        cruise_ratio, escape_ratio = lambda_pattern(phi, alpha)
        report.add(f"{prefix}.step-ratio", "d_g <= min(pi/2, alpha/sin(pi - alpha)) (sin(phi)/phi) cos(phi) d_r",
                   escape_ratio.value * d_r, target.max_step, target.max_step <= escape_ratio.value * d_r,
                   f"alpha={alpha:.4f} lambda={escape_ratio.value:.4f}")
        if variant == MotionVariant.PATTERN_ESCAPE:
            cruise = target.motion.cruise_step
            report.add(f"{prefix}.cruise-ratio", "cruise < (sin(phi)/phi) cos(phi) d_r",
                       cruise_ratio * d_r, cruise, cruise < cruise_ratio * d_r)

    if strict and not report.passed:
        names = ", ".join(check.name for check in report.failures())
        raise InfeasibleConfigError(f"Config '{config.name}' violates: {names}")
    return report


def bounds_summary(config: ExperimentConfig) -> Dict[str, Any]:
    """
    Every bound for a config, tolerant of infeasible inputs (None where undefined).

    Returns:
        Flat dictionary of bound values
    """
    robots = config.robots
    sensors = config.sensor_array
    phi = sensors.half_angle
    r = robots.radius
    beta_r = config.signals.robot.influence
    summary: Dict[str, Any] = {
        "sensors": sensors.count,
        "half_angle": phi,
        "drive_factor": drive_factor(phi),
        "max_robot_step": None,
        "beta_r_lo": None,
        "beta_r_hi": None,
        "min_encap_radius": min_encap_radius(config.orbits.inner, r, None, robots.max_step, half_angle=phi),
        "ring_capacity": None,
        "ring_capacity_floor": None,
        "effective_inner_radius": config.orbits.inner * config.noise.inflation,
    }
    if sensors.count >= 3:
        summary["max_robot_step"] = max_robot_step(robots.robot_safe, r, half_angle=phi)
    lo, hi = _beta_bounds(robots.robot_safe, r, phi, robots.max_step)
    summary["beta_r_lo"], summary["beta_r_hi"] = lo, hi
    try:
        capacity = max_ring_robots(beta_r, r, config.encapsulation.radius)
        summary["ring_capacity"], summary["ring_capacity_floor"] = capacity.value, capacity.floor
    except InfeasibleConfigError:
        pass
    try:
        summary["lambda_random"] = lambda_random(robots.count, beta_r, r, config.orbits.inner)
    except InfeasibleConfigError:
        summary["lambda_random"] = None
    for index, target in enumerate(config.targets):
        alpha = _target_alpha(config, target.escape_radius)
        prefix = f"target[{index}]"
        summary[f"{prefix}.alpha"] = alpha
        if alpha is None:
            continue
        cruise, escape = lambda_pattern(phi, alpha)
        summary[f"{prefix}.lambda_escape"] = escape.value
        summary[f"{prefix}.lambda_tangential"] = escape.tangential
        summary[f"{prefix}.lambda_radial"] = escape.radial
        summary[f"{prefix}.lambda_cruise"] = cruise
    return summary


def derive_parameters(config: ExperimentConfig, margin: float = 0.95) -> ExperimentConfig:
    """
    Fit step sizes and radii of a config to the bounds for its sensor array.

    The robot step is set to ``margin`` of its deadlock bound, beta_r to the
    middle of its admissible interval, each target step to ``margin`` of its
    admissible ratio (static targets stay static), and the inner orbit,
    encapsulation radius and orbit width are widened or narrowed as needed.

    Raises:
        InfeasibleConfigError: If the sensor array has fewer than three sensors
    """
    robots = config.robots
    phi = config.half_angle
    if config.sensor_array.count < 3:
        raise InfeasibleConfigError(f"Cannot fit parameters for {config.sensor_array.count} sensors")
    r = robots.radius
    d_r = margin * max_robot_step(robots.robot_safe, r, half_angle=phi)
    lo, hi = beta_r_interval(robots.robot_safe, r, None, d_r, half_angle=phi)
    beta_r = 0.5 * (lo + hi)

    overrides: Dict[str, Any] = {"robots.max_step": d_r, "signals.robot.influence": beta_r}
    inner = config.orbits.inner
    steps = [t.max_step for t in config.targets]
    for _ in range(2):
        for index, target in enumerate(config.targets):
            variant = MotionVariant(target.motion.model)
            if target.max_step == 0 and variant != MotionVariant.PATTERN_ESCAPE:
                steps[index] = 0.0
                continue
            if variant == MotionVariant.RANDOM:
                ratio = lambda_random(robots.count, beta_r, r, inner)
                steps[index] = margin * ratio * d_r
                continue
            alpha = alpha_angle(beta_r, r, target.escape_radius)
            cruise_ratio, escape_ratio = lambda_pattern(phi, alpha)
            steps[index] = min(margin * escape_ratio.value * d_r,
                               margin * (target.escape_radius - robots.target_safe))
            if variant == MotionVariant.PATTERN_ESCAPE:
                overrides[f"targets.{index}.motion.cruise_step"] = margin * cruise_ratio * d_r
        inner = max(config.orbits.inner, robots.target_safe + max(max(steps, default=0.0), d_r) + FIT_CLEARANCE)

    for index, step in enumerate(steps):
        overrides[f"targets.{index}.max_step"] = max(step, 0.0)
    overrides["orbits.inner"] = inner
    overrides["encapsulation.radius"] = max(
        config.encapsulation.radius, min_encap_radius(inner, r, None, d_r, half_angle=phi) + FIT_CLEARANCE
    )
    overrides["orbits.width"] = min(config.orbits.width, margin * beta_r)
    return with_overrides(config, overrides)


# ---------------------------------------------------------------------------
# Drift diagnostics
# ---------------------------------------------------------------------------

class MomentSummary(NamedTuple):
    """Sample count, mean and standard error of the mean."""
    count: int
    mean: float
    stderr: float


@dataclass
class Moments:
    """Streaming first and second moments."""
    count: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    def add(self, values) -> None:
        values = np.asarray(values, dtype=float).ravel()
        self.count += len(values)
        self.total += float(values.sum())
        self.total_sq += float((values ** 2).sum())

    def summary(self) -> MomentSummary:
        if self.count == 0:
            return MomentSummary(0, math.nan, math.nan)
        mean = self.total / self.count
        if self.count < 2:
            return MomentSummary(self.count, mean, math.inf)
        variance = max((self.total_sq - self.count * mean ** 2) / (self.count - 1), 0.0)
        return MomentSummary(self.count, mean, math.sqrt(variance / self.count))


@dataclass
class DriftStats:
    """
    Empirical drift measured from a trace.

    Attributes:
        delta_v: Change of squared robot-target distance over approach-target steps
        tangential: Relative line-of-sight motion along the tangent, per behavior
        radial: Relative line-of-sight motion along the line of sight, per behavior
        partial: Fewer approach-target samples than DRIFT_MIN_SAMPLES
    """
    delta_v: MomentSummary
    tangential: Dict[str, MomentSummary]
    radial: Dict[str, MomentSummary]
    partial: bool

    def to_dict(self) -> Dict[str, Any]:
        def clean(summary: MomentSummary) -> Dict[str, Any]:
            return {
                "count": summary.count,
                "mean": None if not math.isfinite(summary.mean) else summary.mean,
                "stderr": None if not math.isfinite(summary.stderr) else summary.stderr,
            }
        return {
            "delta_v": clean(self.delta_v),
            "tangential": {label: clean(s) for label, s in sorted(self.tangential.items())},
            "radial": {label: clean(s) for label, s in sorted(self.radial.items())},
            "partial": self.partial,
        }


def _pre_move(entries: List[Dict[str, Any]]) -> Tuple[np.ndarray, np.ndarray]:
    post = np.array([entry["position"] for entry in entries], dtype=float).reshape(-1, 2)
    steps = np.array([entry["step"] for entry in entries], dtype=float)
    headings = np.array([entry["heading"] for entry in entries], dtype=float)
    pre = post - steps[:, None] * unit(headings).reshape(-1, 2)
    return pre, post


class DriftAccumulator:
    """
    Single-pass drift statistics over trace records.

    Pre-move positions are recovered from each record (position minus the
    step along the post-turn heading). Each robot is paired with its nearest
    target that was still live before the step. Frozen robots are skipped.
    """

    def __init__(self, min_samples: int = DRIFT_MIN_SAMPLES):
        self.min_samples = min_samples
        self.delta_v = Moments()
        self.tangential: Dict[str, Moments] = {}
        self.radial: Dict[str, Moments] = {}
        self._captured: set = set()

    def add(self, record: Dict[str, Any]) -> None:
        robots = record.get("robots", [])
        targets = record.get("targets", [])
        live = [j for j in range(len(targets)) if j not in self._captured]
        self._captured.update(j for j, target in enumerate(targets) if target.get("captured"))
        if not robots or not live:
            return

        labels = np.array([entry["behavior"] for entry in robots])
        active = labels != Behavior.FROZEN.value
        if not active.any():
            return
        robot_pre, robot_post = _pre_move(robots)
        target_pre, target_post = _pre_move(targets)
        target_pre, target_post = target_pre[live], target_post[live]

        robot_pre, robot_post, labels = robot_pre[active], robot_post[active], labels[active]
        gaps = target_pre[None, :, :] - robot_pre[:, None, :]
        nearest = np.argmin(np.hypot(gaps[..., 0], gaps[..., 1]), axis=1)
        line = target_pre[nearest] - robot_pre
        length = np.hypot(line[:, 0], line[:, 1])
        keep = length > 1e-12
        if not keep.any():
            return
        line_hat = line[keep] / length[keep, None]
        tangent_hat = np.stack([-line_hat[:, 1], line_hat[:, 0]], axis=1)
        relative = (target_post[nearest] - target_pre[nearest]) - (robot_post - robot_pre)
        relative = relative[keep]
        radial = np.einsum("ij,ij->i", relative, line_hat)
        tangential = np.einsum("ij,ij->i", relative, tangent_hat)
        labels = labels[keep]

        after = target_post[nearest][keep] - robot_post[keep]
        change = np.einsum("ij,ij->i", after, after) - length[keep] ** 2

        for label in np.unique(labels):
            mask = labels == label
            self.tangential.setdefault(str(label), Moments()).add(tangential[mask])
            self.radial.setdefault(str(label), Moments()).add(radial[mask])
            if label == Behavior.APPROACH_TARGET.value:
                self.delta_v.add(change[mask])

    def result(self) -> DriftStats:
        return DriftStats(
            delta_v=self.delta_v.summary(),
            tangential={label: m.summary() for label, m in self.tangential.items()},
            radial={label: m.summary() for label, m in self.radial.items()},
            partial=self.delta_v.count < self.min_samples,
        )


def drift_diagnostics(trace: Iterable[Dict[str, Any]], min_samples: int = DRIFT_MIN_SAMPLES) -> DriftStats:
    """
    Measure drift from trace records.

    Args:
        trace: Trace records in timestep order
        min_samples: Approach-target samples below which the report is partial

    Returns:
        DriftStats
    """
    accumulator = DriftAccumulator(min_samples)
    for record in trace:
        accumulator.add(record)
    stats = accumulator.result()
    if stats.partial:
        logger.warning(
            f"Only {stats.delta_v.count} approach-target samples (< {min_samples}); drift report is partial"
        )
    return stats
