"""Linear map between desired planar fields and per-axis coil currents.

The six physical coils reduce to two logical axes: opposing pairs driven
antagonistically in the horizontal plane; the vertical pair is unused.  The
field is assumed spatially uniform, so a single 2x2 gain matrix (tesla per
ampere) plus a per-axis current limit is the whole model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Vec2
from .simworld import FieldCommand

MAX_CONDITION = 1e6


class SingularCalibration(ValueError):
    """Gain matrix is not usably invertible."""


class UnreachableField(ValueError):
    """Requested field needs current beyond the per-axis limit."""


@dataclass(frozen=True)
class CoilCalibration:
    gain: tuple[tuple[float, float], tuple[float, float]] = ((1e-3, 0.0), (0.0, 1e-3))
    max_current: float = 3.0    # amperes per axis

    def __post_init__(self):
        if self.max_current <= 0:
            raise ValueError("max_current must be > 0")
        g = np.asarray(self.gain, dtype=float)
        if g.shape != (2, 2):
            raise ValueError("gain must be a 2x2 matrix")
        if not np.isfinite(g).all() or np.linalg.cond(g) >= MAX_CONDITION:
            raise SingularCalibration("gain matrix condition number >= 1e6")

    def matrix(self) -> np.ndarray:
        return np.asarray(self.gain, dtype=float)

    def inverse(self) -> np.ndarray:
        (a, b), (c, d) = self.gain
        det = a * d - b * c
        return np.array([[d, -b], [-c, a]]) / det


@dataclass(frozen=True)
class CoilCurrents:
    ix: float
    iy: float


def currents_for_field(command: FieldCommand, cal: CoilCalibration) -> CoilCurrents:
    """Axis currents realizing the commanded field; errors instead of clamping."""
    b = np.array([command.direction.x, command.direction.y]) * command.magnitude
    ix, iy = cal.inverse() @ b
    if abs(ix) > cal.max_current or abs(iy) > cal.max_current:
        raise UnreachableField(
            f"field {command.magnitude:.3g} T along "
            f"({command.direction.x:.3f}, {command.direction.y:.3f}) needs "
            f"({ix:.3g}, {iy:.3g}) A, limit {cal.max_current} A")
    return CoilCurrents(ix=float(ix), iy=float(iy))


def field_for_currents(currents: CoilCurrents, cal: CoilCalibration) -> Vec2:
    """Forward model: gain @ (ix, iy), in tesla."""
    bx, by = cal.matrix() @ np.array([currents.ix, currents.iy])
    return Vec2(float(bx), float(by))


def max_reachable_magnitude(cal: CoilCalibration) -> float:
    """Largest magnitude realizable in every direction within the current limit.

    Per axis i the worst-case unit direction needs |row_i(gain^-1)| amperes per
    tesla, so the direction-independent ceiling is max_current / max_i |row_i|.
    """
    inv = cal.inverse()
    worst = max(float(np.hypot(*inv[0])), float(np.hypot(*inv[1])))
    return cal.max_current / worst
