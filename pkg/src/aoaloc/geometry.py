"""Planar geometry primitives: points, regions, and bearing angles.

Coordinates are meters (x East, y North); angles are radians internally
and follow the math convention (0 along +x, counter-clockwise positive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WorldPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"world point must be finite, got ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle in world coordinates."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"empty region: {self}")

    @classmethod
    def square(cls, half_extent: float) -> "Region":
        return cls(-half_extent, half_extent, -half_extent, half_extent)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def shrunk(self, margin: float) -> "Region":
        """Region with `margin` removed from every side; raises if that empties it."""
        return Region(
            self.x_min + margin, self.x_max - margin,
            self.y_min + margin, self.y_max - margin,
        )


#: The paper-scale region: +/-100 km along both axes.
DEFAULT_REGION = Region.square(100_000.0)


def wrap_angle(theta):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    wrapped = theta - TWO_PI * np.floor((theta + math.pi) / TWO_PI)
    # np.floor maps odd multiples of pi to the -pi edge; the convention is (-pi, pi].
    if np.ndim(wrapped) == 0:
        return math.pi if wrapped == -math.pi else float(wrapped)
    wrapped[wrapped == -math.pi] = math.pi
    return wrapped


def true_bearing(platform: WorldPoint, source: WorldPoint) -> float:
    """Four-quadrant angle of (source - platform), in (-pi, pi].

    Raises DegenerateGeometryError when the points coincide.
    """
    dx = source.x - platform.x
    dy = source.y - platform.y
    if dx == 0.0 and dy == 0.0:
        raise DegenerateGeometryError(
            f"bearing undefined: platform and source coincide at ({platform.x}, {platform.y})"
        )
    angle = math.atan2(dy, dx)
    # atan2 yields -pi for dy == -0.0, dx < 0; fold onto the (-pi, pi] edge.
    return math.pi if angle == -math.pi else angle
