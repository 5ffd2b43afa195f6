"""Planar vector and angle algebra shared by the simulator, tracker and controller.

All angles are radians wrapped to the half-open interval (-pi, pi].  Directions
are carried as unit vectors; magnitudes travel separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

# |v| below this is treated as a zero vector (working unit is whatever the
# caller's coordinate system uses: meters, pixels or tesla).
ZERO_NORM = 1e-15


class ZeroVector(ValueError):
    """Raised when a direction is requested from a (near-)zero vector."""


@dataclass(frozen=True)
class Vec2:
    """Immutable 2D vector. Components must be finite."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite components: ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        """z-component of the 3D cross product."""
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y

    def distance_to(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def angle(self) -> float:
        """Angle from the +x axis, in (-pi, pi]."""
        return wrap_angle(math.atan2(self.y, self.x))


def from_angle(theta: float) -> Vec2:
    """Unit vector at angle ``theta`` from the +x axis."""
    return Vec2(math.cos(theta), math.sin(theta))


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi].  -pi maps to +pi."""
    r = math.fmod(theta + math.pi, TWO_PI)
    if r <= 0.0:
        r += TWO_PI
    return r - math.pi


def unit(v: Vec2) -> Vec2:
    """Return v / |v|.

    Raises ZeroVector if |v| < 1e-15, below which the direction is meaningless.
    """
    n = v.norm()
    if n < ZERO_NORM:
        raise ZeroVector(f"cannot normalize near-zero vector ({v.x}, {v.y})")
    return Vec2(v.x / n, v.y / n)


def rotate(v: Vec2, theta: float) -> Vec2:
    """Rotate v by theta (counterclockwise in a right-handed frame)."""
    c = math.cos(theta)
    s = math.sin(theta)
    return Vec2(v.x * c - v.y * s, v.x * s + v.y * c)


def signed_angle(a: Vec2, b: Vec2) -> float:
    """Angle theta in (-pi, pi] such that rotate(unit(a), theta) == unit(b).

    Computed as atan2(a x b, a . b) on unit-normalized inputs.  Antiparallel
    vectors map to +pi (the upper boundary of the wrap interval).
    """
    ua = unit(a)
    ub = unit(b)
    return wrap_angle(math.atan2(ua.cross(ub), ua.dot(ub)))
