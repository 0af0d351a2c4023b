"""
Signal sources and isotropic sensing.

Every entity emits a radially decreasing signal with a hard cutoff. Robots
carry a ring of isotropic sensors; each sensor reports the sum of all
same-kind signals at its location (boundary signals are integrated along the
boundary). Distances are recovered with the inverse profile and turned into a
guaranteed under-approximation of the center-to-source distance.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.spatial.distance import cdist

from src.environment import Environment
from src.geometry import Pose, TWO_PI


class DegenerateGeometryError(ValueError):
    """Raised when a sensor distance is too small for the virtual-source construction."""
    pass


class SignalKind(str, Enum):
    """Who emits a signal."""
    TARGET = "target"
    ROBOT = "robot"
    ENVIRONMENT = "environment"


class SignalFamily(str, Enum):
    """Parametric strength profiles."""
    LINEAR = "linear"
    INVERSE_SQUARE = "inverse_square"


@dataclass(frozen=True)
class SignalProfile:
    """
    Strength profile B(d) of one signal kind.

    ``linear``: B(d) = A * max(0, 1 - d / beta).
    ``inverse_square``: B(d) = A * c * (1/(core + d)^2 - 1/(core + beta)^2) for d < beta,
    scaled so that B(0) = A.
    """
    kind: SignalKind
    influence_radius: float
    family: SignalFamily = SignalFamily.LINEAR
    amplitude: float = 1.0
    core: float = 1.0

    def __post_init__(self):
        if self.influence_radius <= 0:
            raise ValueError(f"{self.kind.value} influence radius must be positive, got {self.influence_radius}")
        if self.amplitude <= 0:
            raise ValueError(f"{self.kind.value} amplitude must be positive, got {self.amplitude}")
        if self.core <= 0:
            raise ValueError(f"{self.kind.value} core must be positive, got {self.core}")

    @property
    def peak(self) -> float:
        return self.amplitude

    @property
    def _scale(self) -> float:
        beta, eps = self.influence_radius, self.core
        return 1.0 / (1.0 / eps ** 2 - 1.0 / (eps + beta) ** 2)

    def strength(self, d):
        """B(d) for scalar or array distances (no sign check)."""
        d = np.asarray(d, dtype=float)
        beta = self.influence_radius
        if self.family == SignalFamily.LINEAR:
            value = self.amplitude * np.clip(1.0 - d / beta, 0.0, None)
        else:
            eps = self.core
            raw = 1.0 / (eps + np.minimum(d, beta)) ** 2 - 1.0 / (eps + beta) ** 2
            value = np.where(d < beta, self.amplitude * self._scale * raw, 0.0)
        return value if value.ndim else float(value)

    def inverse(self, z):
        """
        Distance at which a single source produces intensity z.

        Zero intensity maps to the influence radius; intensities at or above
        the peak map to 0.
        """
        z = np.clip(np.asarray(z, dtype=float), 0.0, self.amplitude)
        beta = self.influence_radius
        if self.family == SignalFamily.LINEAR:
            d = beta * (1.0 - z / self.amplitude)
        else:
            eps = self.core
            d = 1.0 / np.sqrt(z / (self.amplitude * self._scale) + 1.0 / (eps + beta) ** 2) - eps
        d = np.clip(d, 0.0, beta)
        return d if d.ndim else float(d)


def signal_strength(profile: SignalProfile, d):
    """
    Evaluate B_s(d).

    Args:
        profile: Signal profile
        d: Non-negative distance (scalar or array)

    Returns:
        Intensity, 0 at and beyond the influence radius

    Raises:
        ValueError: If any distance is negative
    """
    if np.any(np.asarray(d) < 0):
        raise ValueError(f"Distance must be non-negative, got {d}")
    return profile.strength(d)


@dataclass(frozen=True)
class SensorArray:
    """
    Ring of isotropic sensors on a robot.

    ``angles`` are bearings relative to the robot heading, sorted and distinct
    in [0, 2*pi). ``mount_radius`` is the sensor-to-center distance.
    """
    angles: Tuple[float, ...]
    mount_radius: float
    symmetric: bool = False

    def __post_init__(self):
        if not self.angles:
            raise ValueError("A sensor array needs at least one sensor")
        angles = np.asarray(self.angles, dtype=float)
        if np.any(angles < 0) or np.any(angles >= TWO_PI):
            raise ValueError(f"Sensor angles must lie in [0, 2*pi): {self.angles}")
        if np.any(np.diff(angles) <= 0):
            raise ValueError(f"Sensor angles must be sorted and distinct: {self.angles}")
        if self.mount_radius < 0:
            raise ValueError(f"Mount radius must be non-negative, got {self.mount_radius}")

    @classmethod
    def evenly_spaced(cls, count: int, mount_radius: float) -> "SensorArray":
        if count < 1:
            raise ValueError(f"Sensor count must be positive, got {count}")
        angles = tuple(float(TWO_PI * k / count) for k in range(count))
        return cls(angles=angles, mount_radius=float(mount_radius), symmetric=True)

    @classmethod
    def from_angles(cls, angles: Sequence[float], mount_radius: float) -> "SensorArray":
        """Build an arbitrary array; angles are wrapped into [0, 2*pi) and sorted."""
        wrapped = sorted(float(np.mod(a, TWO_PI)) for a in angles)
        return cls(angles=tuple(wrapped), mount_radius=float(mount_radius), symmetric=False)

    @property
    def count(self) -> int:
        return len(self.angles)

    @cached_property
    def angle_array(self) -> np.ndarray:
        return np.asarray(self.angles, dtype=float)

    @cached_property
    def gaps(self) -> np.ndarray:
        """Angular gap from each sensor to the next one counter-clockwise."""
        nxt = np.roll(self.angle_array, -1)
        gaps = np.mod(nxt - self.angle_array, TWO_PI)
        if self.count == 1:
            gaps = np.array([TWO_PI])
        return gaps

    @cached_property
    def half_gaps(self) -> np.ndarray:
        """Per-sensor half-gap: half the wider of the two adjacent gaps."""
        if self.symmetric:
            return np.full(self.count, np.pi / self.count)
        return 0.5 * np.maximum(self.gaps, np.roll(self.gaps, 1))

    @cached_property
    def half_angle(self) -> float:
        """Global half-angle: half the widest adjacent gap."""
        if self.symmetric:
            return float(np.pi / self.count)
        return float(0.5 * np.max(self.gaps))

    def sensor_positions(self, pose: Pose) -> np.ndarray:
        """Global sensor positions for a robot pose, shape (p, 2)."""
        bearings = pose.heading + self.angle_array
        return np.column_stack([
            pose.x + self.mount_radius * np.cos(bearings),
            pose.y + self.mount_radius * np.sin(bearings),
        ])

    def bracketing(self, theta) -> Tuple[np.ndarray, np.ndarray]:
        """
        Indices of the two sensors enclosing heading(s) theta (robot frame).

        Returns:
            (lower, upper) index arrays; equal when there is one sensor
        """
        wrapped = np.mod(np.atleast_1d(np.asarray(theta, dtype=float)), TWO_PI)
        lower = (np.searchsorted(self.angle_array, wrapped, side="right") - 1) % self.count
        upper = (lower + 1) % self.count
        return lower, upper


@dataclass(eq=False)
class ReadingSet:
    """Per-sensor intensities for the three signal kinds, each of shape (p,)."""
    target: np.ndarray
    robot: np.ndarray
    environment: np.ndarray

    def for_kind(self, kind: SignalKind) -> np.ndarray:
        if kind == SignalKind.TARGET:
            return self.target
        if kind == SignalKind.ROBOT:
            return self.robot
        return self.environment

    @classmethod
    def silent(cls, count: int) -> "ReadingSet":
        return cls(np.zeros(count), np.zeros(count), np.zeros(count))


@dataclass(frozen=True)
class NoiseSpec:
    """Relative Gaussian sensor noise: z = (1 - n) * sum, n ~ N(0, sigma^2), n <= 1."""
    sigma: float = 0.0
    enabled: bool = True

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"Noise sigma must be non-negative, got {self.sigma}")

    @property
    def active(self) -> bool:
        return self.enabled and self.sigma > 0


def sample_noise_factors(noise: NoiseSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """
    Draw noise factors n ~ N(0, sigma^2) truncated to n <= 1 by resampling.

    Returns:
        Array of shape (size,); all zeros when noise is inactive
    """
    if not noise.active:
        return np.zeros(size)
    factors = rng.normal(0.0, noise.sigma, size)
    rejected = factors > 1.0
    while rejected.any():
        factors[rejected] = rng.normal(0.0, noise.sigma, int(rejected.sum()))
        rejected = factors > 1.0
    return factors


@dataclass(frozen=True, eq=False)
class SignalField:
    """Everything that emits at one instant: profiles, source positions and the boundary."""
    target_profile: SignalProfile
    robot_profile: SignalProfile
    environment_profile: SignalProfile
    target_sources: np.ndarray
    robot_sources: np.ndarray
    environment: Environment
    quadrature_divisions: int = 200


def _point_readings(sensor_points: np.ndarray, sources: np.ndarray, profile: SignalProfile) -> np.ndarray:
    if len(sources) == 0:
        return np.zeros(len(sensor_points))
    distances = cdist(sensor_points, sources)
    return np.asarray(profile.strength(distances)).sum(axis=1)


def sense(
    pose: Pose,
    sensors: SensorArray,
    signal_field: SignalField,
    noise: NoiseSpec,
    rng: Optional[np.random.Generator] = None,
    self_index: Optional[int] = None
) -> ReadingSet:
    """
    Compute the readings of every sensor on a robot.

    Args:
        pose: Robot pose in the global frame
        sensors: The robot's sensor array
        signal_field: Emitting sources and the environment
        noise: Sensor noise model
        rng: Random stream for noise draws (required when noise is active)
        self_index: Row of ``signal_field.robot_sources`` holding this robot, excluded from sensing

    Returns:
        ReadingSet with non-negative intensities
    """
    points = sensors.sensor_positions(pose)
    robots = signal_field.robot_sources
    if self_index is not None and len(robots):
        robots = np.delete(robots, self_index, axis=0)

    target = _point_readings(points, signal_field.target_sources, signal_field.target_profile)
    robot = _point_readings(points, robots, signal_field.robot_profile)
    boundary = signal_field.environment.line_readings(
        points,
        signal_field.environment_profile.strength,
        signal_field.environment_profile.influence_radius,
        signal_field.quadrature_divisions,
    )

    if noise.active:
        if rng is None:
            raise ValueError("A random stream is required for noisy sensing")
        p = sensors.count
        target = target * (1.0 - sample_noise_factors(noise, rng, p))
        robot = robot * (1.0 - sample_noise_factors(noise, rng, p))
        boundary = boundary * (1.0 - sample_noise_factors(noise, rng, p))

    return ReadingSet(target=target, robot=robot, environment=boundary)


def virtual_source_distance(d_sensor, mount_radius: float, half_angle: float):
    """
    Closest possible center-to-source distance consistent with one sensor reading.

    d_s = r cos(phi) + sqrt(d_sensor^2 - r^2 sin^2(phi))

    Args:
        d_sensor: Sensor-to-source distance (scalar or array)
        mount_radius: Sensor-to-center distance r
        half_angle: Half-angle phi of the sensor's admissible cone

    Returns:
        Under-approximated center-to-source distance

    Raises:
        DegenerateGeometryError: If d_sensor < r sin(phi)
    """
    d_sensor = np.asarray(d_sensor, dtype=float)
    lateral = mount_radius * np.sin(half_angle)
    discriminant = d_sensor ** 2 - lateral ** 2
    if np.any(discriminant < -1e-12):
        raise DegenerateGeometryError(
            f"Sensor distance {d_sensor} is below r*sin(phi) = {lateral:.6g}"
        )
    result = mount_radius * np.cos(half_angle) + np.sqrt(np.maximum(discriminant, 0.0))
    return result if result.ndim else float(result)


@dataclass(frozen=True, eq=False)
class LineResponse:
    """
    Integrated reading of an infinite straight boundary versus perpendicular distance.

    ``heights`` increase from 0 to the influence radius; ``values`` decrease.
    """
    heights: np.ndarray
    values: np.ndarray

    @property
    def spacing(self) -> float:
        return float(self.heights[1] - self.heights[0])

    def value(self, h):
        return np.interp(h, self.heights, self.values)

    def inverse(self, z) -> float:
        """
        Perpendicular distance producing reading z, rounded down by one table cell.

        The downward rounding keeps the estimate below the true distance
        despite quadrature and interpolation error.
        """
        h = float(np.interp(z, self.values[::-1], self.heights[::-1]))
        return max(h - self.spacing, 0.0)


@lru_cache(maxsize=32)
def line_response(profile: SignalProfile, resolution: int = 2000, samples: int = 401) -> LineResponse:
    """
    Tabulate the straight-boundary response of a profile (cached per profile).

    Args:
        profile: Boundary signal profile
        resolution: Number of height intervals between 0 and the influence radius
        samples: Quadrature points across each visible chord

    Returns:
        LineResponse table
    """
    beta = profile.influence_radius
    heights = np.linspace(0.0, beta, resolution + 1)
    half_chords = np.sqrt(np.maximum(beta ** 2 - heights ** 2, 0.0))
    t = half_chords[:, None] * np.linspace(-1.0, 1.0, samples)[None, :]
    distances = np.sqrt(heights[:, None] ** 2 + t ** 2)
    values = trapezoid(np.asarray(profile.strength(distances)), t, axis=1)
    values[-1] = 0.0
    return LineResponse(heights=heights, values=values)


class DistanceEstimate(NamedTuple):
    """Inferred center-to-source distance and the sensor it came from."""
    distance: float
    sensor: int
    sensor_distance: float


def infer_distance(readings: ReadingSet, profile: SignalProfile, sensors: SensorArray) -> Optional[DistanceEstimate]:
    """
    Estimate the distance from the robot center to the nearest source of a kind.

    Uses the strongest sensor (lowest index on ties), inverts its reading and
    applies the virtual-source construction with that sensor's half-gap.

    Args:
        readings: Current readings
        profile: Profile of the signal kind to estimate
        sensors: The robot's sensor array

    Returns:
        DistanceEstimate, or None when nothing of that kind is sensed
    """
    z = readings.for_kind(profile.kind)
    if z.size == 0 or float(np.max(z)) <= 0.0:
        return None
    k = int(np.argmax(z))
    if profile.kind == SignalKind.ENVIRONMENT:
        d_sensor = line_response(profile).inverse(float(z[k]))
    else:
        d_sensor = float(profile.inverse(float(z[k])))

    half_gap = float(sensors.half_gaps[k])
    r = sensors.mount_radius
    if d_sensor <= r * np.sin(half_gap):
        distance = r * np.cos(half_gap)
    else:
        distance = virtual_source_distance(d_sensor, r, half_gap)
    return DistanceEstimate(distance=float(distance), sensor=k, sensor_distance=d_sensor)
