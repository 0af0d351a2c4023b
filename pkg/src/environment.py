"""
Convex bounded environments (rectangle or disk).

Provides exact boundary distances, inward normals, uniform placement and the
boundary line-integral used by boundary sensing.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from src.geometry import segment_circle_window


class EnvironmentShape(str, Enum):
    """Supported environment outlines."""
    RECTANGLE = "rectangle"
    DISK = "disk"


@dataclass(frozen=True)
class Environment:
    """
    A convex region in the global frame.

    Rectangles span [0, width] x [0, height]. Disks are centered at ``center``.
    """
    shape: EnvironmentShape
    width: float = 0.0
    height: float = 0.0
    radius: float = 0.0
    center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.shape == EnvironmentShape.RECTANGLE and (self.width <= 0 or self.height <= 0):
            raise ValueError(f"Rectangle needs positive width and height, got {self.width} x {self.height}")
        if self.shape == EnvironmentShape.DISK and self.radius <= 0:
            raise ValueError(f"Disk needs a positive radius, got {self.radius}")

    @classmethod
    def rectangle(cls, width: float, height: float) -> "Environment":
        return cls(EnvironmentShape.RECTANGLE, width=float(width), height=float(height))

    @classmethod
    def disk(cls, radius: float, center: Optional[Tuple[float, float]] = None) -> "Environment":
        if center is None:
            center = (float(radius), float(radius))
        return cls(EnvironmentShape.DISK, radius=float(radius), center=(float(center[0]), float(center[1])))

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        """Axis-aligned bounding box (xmin, ymin, xmax, ymax)."""
        if self.shape == EnvironmentShape.RECTANGLE:
            return 0.0, 0.0, self.width, self.height
        cx, cy = self.center
        return cx - self.radius, cy - self.radius, cx + self.radius, cy + self.radius

    def edges(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Boundary segments of a rectangle, counter-clockwise."""
        if self.shape != EnvironmentShape.RECTANGLE:
            raise ValueError("Only rectangles have straight edges")
        corners = np.array([[0.0, 0.0], [self.width, 0.0], [self.width, self.height], [0.0, self.height]])
        return [(corners[i], corners[(i + 1) % 4]) for i in range(4)]

    def distance_to_boundary(self, points) -> np.ndarray:
        """
        Signed distance from point(s) to the boundary, positive inside.

        Args:
            points: Array of shape (2,) or (n, 2)

        Returns:
            Scalar or array of shape (n,)
        """
        points = np.asarray(points, dtype=float)
        if self.shape == EnvironmentShape.RECTANGLE:
            x, y = points[..., 0], points[..., 1]
            distance = np.minimum(np.minimum(x, self.width - x), np.minimum(y, self.height - y))
        else:
            offset = points - np.asarray(self.center)
            distance = self.radius - np.hypot(offset[..., 0], offset[..., 1])
        return distance if np.ndim(distance) else float(distance)

    def contains(self, points, margin: float = 0.0):
        """True where points are at least ``margin`` inside the boundary."""
        return np.asarray(self.distance_to_boundary(points)) >= margin

    def inward_normal(self, point) -> np.ndarray:
        """Unit normal of the nearest boundary piece, pointing into the region."""
        point = np.asarray(point, dtype=float)
        if self.shape == EnvironmentShape.RECTANGLE:
            x, y = point
            gaps = [x, self.width - x, y, self.height - y]
            normals = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
            return np.array(normals[int(np.argmin(gaps))])
        offset = np.asarray(self.center) - point
        norm = np.hypot(offset[0], offset[1])
        if norm < 1e-12:
            return np.array([1.0, 0.0])
        return offset / norm

    def reflect_heading(self, point, heading: float) -> float:
        """
        Mirror a heading off the nearest boundary if it points outward.

        Headings already pointing inward (or along the boundary) are returned unchanged.
        """
        normal = self.inward_normal(point)
        direction = np.array([np.cos(heading), np.sin(heading)])
        inward = float(direction @ normal)
        if inward >= 0.0:
            return float(heading)
        reflected = direction - 2.0 * inward * normal
        return float(np.arctan2(reflected[1], reflected[0]))

    def sample_point(self, rng: np.random.Generator, margin: float = 0.0) -> np.ndarray:
        """
        Draw a point uniformly from the region shrunk by ``margin``.

        Raises:
            ValueError: If the margin leaves no room
        """
        if self.shape == EnvironmentShape.RECTANGLE:
            if 2 * margin >= min(self.width, self.height):
                raise ValueError(f"Margin {margin} leaves no room in a {self.width} x {self.height} rectangle")
            return np.array([
                rng.uniform(margin, self.width - margin),
                rng.uniform(margin, self.height - margin),
            ])
        if margin >= self.radius:
            raise ValueError(f"Margin {margin} leaves no room in a disk of radius {self.radius}")
        r = (self.radius - margin) * np.sqrt(rng.uniform())
        angle = rng.uniform(0.0, 2.0 * np.pi)
        return np.asarray(self.center) + r * np.array([np.cos(angle), np.sin(angle)])

    def line_readings(
        self,
        sensor_points: np.ndarray,
        strength: Callable[[np.ndarray], np.ndarray],
        influence_radius: float,
        divisions: int = 200
    ) -> np.ndarray:
        """
        Integrate a point-source strength along the boundary for each sensor.

        Only boundary within ``influence_radius`` of a sensor contributes.
        Composite trapezoid rule with step <= influence_radius / divisions.

        Args:
            sensor_points: Sensor positions, shape (p, 2)
            strength: Vectorized map distance -> intensity
            influence_radius: Cutoff distance of the boundary signal
            divisions: Quadrature resolution

        Returns:
            Integrated reading per sensor, shape (p,)
        """
        sensor_points = np.atleast_2d(np.asarray(sensor_points, dtype=float))
        readings = np.zeros(len(sensor_points))
        max_step = influence_radius / divisions
        clearance = np.atleast_1d(self.distance_to_boundary(sensor_points))

        for k, sensor in enumerate(sensor_points):
            if clearance[k] >= influence_radius:
                continue
            if self.shape == EnvironmentShape.RECTANGLE:
                readings[k] = self._segment_integral(sensor, strength, influence_radius, max_step)
            else:
                readings[k] = self._arc_integral(sensor, strength, influence_radius, max_step)
        return readings

    def _segment_integral(self, sensor, strength, influence_radius, max_step) -> float:
        total = 0.0
        for p0, p1 in self.edges():
            a, b = segment_circle_window(p0, p1, sensor, influence_radius)
            if b - a <= 0.0:
                continue
            count = max(2, int(np.ceil((b - a) / max_step)) + 1)
            t = np.linspace(a, b, count)
            direction = (p1 - p0) / np.hypot(*(p1 - p0))
            points = p0 + t[:, None] * direction
            distances = np.hypot(points[:, 0] - sensor[0], points[:, 1] - sensor[1])
            total += float(trapezoid(strength(distances), t))
        return total

    def _arc_integral(self, sensor, strength, influence_radius, max_step) -> float:
        center = np.asarray(self.center)
        offset = sensor - center
        rho = float(np.hypot(offset[0], offset[1]))
        R = self.radius
        if rho < 1e-12:
            if R >= influence_radius:
                return 0.0
            return float(2.0 * np.pi * R * strength(np.array([R]))[0])

        bound = (rho * rho + R * R - influence_radius ** 2) / (2.0 * rho * R)
        if bound >= 1.0:
            return 0.0
        half_span = float(np.arccos(max(bound, -1.0)))
        count = max(2, int(np.ceil(2.0 * half_span * R / max_step)) + 1)
        base = np.arctan2(offset[1], offset[0])
        angles = np.linspace(base - half_span, base + half_span, count)
        points = center + R * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        distances = np.hypot(points[:, 0] - sensor[0], points[:, 1] - sensor[1])
        return float(R * trapezoid(strength(distances), angles))
