"""
Planar geometry helpers shared by the sensing model and the controllers.

Angles are radians. Headings in a robot frame are measured from the robot's
current heading; everything else is in the global frame.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    """Wrap an angle (or array of angles) into [0, 2*pi)."""
    wrapped = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    wrapped = np.where(wrapped >= TWO_PI, 0.0, wrapped)
    return wrapped if wrapped.ndim else float(wrapped)


def wrap_to_pi(theta):
    """Wrap an angle (or array of angles) into (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), TWO_PI)
    return wrapped if wrapped.ndim else float(wrapped)


def unit(theta) -> np.ndarray:
    """Unit vector(s) for heading(s) theta; shape (..., 2)."""
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


@dataclass(frozen=True)
class Pose:
    """Position and heading of a robot or target in the global frame."""
    x: float
    y: float
    heading: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class AngularInterval:
    """
    A closed arc of headings [lo, hi], interpreted modulo 2*pi.

    ``lo`` and ``hi`` are stored unwrapped with ``hi >= lo`` so an interval
    may straddle zero; membership is evaluated modulo 2*pi.
    """
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def is_empty(self) -> bool:
        return self.width <= 0.0

    def contains(self, theta, tol: float = 1e-12):
        """
        Test whether heading(s) lie in the interval.

        Args:
            theta: Angle or array of angles (any branch)
            tol: Slack applied at both ends

        Returns:
            Boolean or boolean array
        """
        if self.width >= TWO_PI - tol:
            result = np.ones_like(np.asarray(theta, dtype=float), dtype=bool)
            return result if result.ndim else bool(result)
        offset = np.mod(np.asarray(theta, dtype=float) - self.lo + tol, TWO_PI)
        result = offset <= self.width + 2.0 * tol
        return result if np.ndim(result) else bool(result)

    def samples(self, count: int) -> np.ndarray:
        """Evenly spaced headings from lo to hi inclusive."""
        if count < 1:
            raise ValueError("count must be positive")
        if count == 1:
            return np.array([self.midpoint])
        return np.linspace(self.lo, self.hi, count)

    def shifted(self, offset: float) -> "AngularInterval":
        return AngularInterval(self.lo + offset, self.hi + offset)


def distance_to_ray(points: np.ndarray, direction: float, start: float) -> np.ndarray:
    """
    Distance from points to the ray {s * u(direction) : s >= start} from the origin.

    Args:
        points: Array of shape (..., 2)
        direction: Ray bearing
        start: Distance from the origin where the ray begins

    Returns:
        Array of shape (...)
    """
    u = np.array([np.cos(direction), np.sin(direction)])
    along = points @ u
    perpendicular = np.abs(points[..., 0] * u[1] - points[..., 1] * u[0])
    endpoint = points - start * u
    to_endpoint = np.hypot(endpoint[..., 0], endpoint[..., 1])
    return np.where(along >= start, perpendicular, to_endpoint)


def distance_to_sector(points: np.ndarray, bearings: AngularInterval, near_range: float) -> np.ndarray:
    """
    Distance from points to the sector {bearing in ``bearings``, range >= near_range}.

    The sector is anchored at the origin. Points inside it have distance 0.

    Args:
        points: Array of shape (..., 2)
        bearings: Admissible bearings of the sector
        near_range: Closest range of the sector

    Returns:
        Array of shape (...)
    """
    points = np.asarray(points, dtype=float)
    ranges = np.hypot(points[..., 0], points[..., 1])
    bearing = np.arctan2(points[..., 1], points[..., 0])
    inside_cone = bearings.contains(bearing)
    in_cone_distance = np.maximum(near_range - ranges, 0.0)
    edge_distance = np.minimum(
        distance_to_ray(points, bearings.lo, near_range),
        distance_to_ray(points, bearings.hi, near_range),
    )
    return np.where(inside_cone, in_cone_distance, edge_distance)


def segment_circle_window(p0: np.ndarray, p1: np.ndarray, center: np.ndarray, radius: float) -> Tuple[float, float]:
    """
    Parameter window [a, b] (arc length along p0->p1) of a segment inside a disk.

    Returns:
        (a, b) with a >= b when the segment misses the disk
    """
    edge = p1 - p0
    length = float(np.hypot(edge[0], edge[1]))
    direction = edge / length
    foot = float((center - p0) @ direction)
    offset = center - (p0 + foot * direction)
    height_sq = float(offset @ offset)
    if height_sq >= radius * radius:
        return 0.0, 0.0
    half_chord = np.sqrt(radius * radius - height_sq)
    return max(0.0, foot - half_chord), min(length, foot + half_chord)
