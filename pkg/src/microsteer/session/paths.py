"""Polyline helpers: arc-length resampling into nodes and cross-track distance."""

from __future__ import annotations

import math

from ..geometry import Vec2


class DegeneratePath(ValueError):
    """Drawn path has zero total length."""


def resample_path(points: list[Vec2], node_spacing: float) -> list[Vec2]:
    """Resample a polyline at node_spacing arc-length intervals.

    The first and last input points are always nodes.  A spacing longer than
    the path collapses to [first, last].
    """
    if len(points) < 2:
        raise ValueError("need at least 2 points")
    if node_spacing <= 0:
        raise ValueError("node_spacing must be > 0")

    seg_lengths = [points[i].distance_to(points[i + 1])
                   for i in range(len(points) - 1)]
    total = sum(seg_lengths)
    if total <= 0.0:
        raise DegeneratePath("path has zero length")

    nodes = [points[0]]
    target_s = node_spacing
    s = 0.0
    for p0, p1, seg in zip(points, points[1:], seg_lengths):
        if seg == 0.0:
            continue
        while target_s <= s + seg:
            f = (target_s - s) / seg
            nodes.append(Vec2(p0.x + f * (p1.x - p0.x),
                              p0.y + f * (p1.y - p0.y)))
            target_s += node_spacing
        s += seg
    # Final point is always included; drop a marched node that landed on it.
    if nodes[-1].distance_to(points[-1]) < 1e-9 * max(1.0, total):
        nodes[-1] = points[-1]
    else:
        nodes.append(points[-1])
    return nodes


def _point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> float:
    abx, aby = b.x - a.x, b.y - a.y
    seg2 = abx * abx + aby * aby
    if seg2 == 0.0:
        return p.distance_to(a)
    t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / seg2
    t = min(1.0, max(0.0, t))
    return math.hypot(p.x - (a.x + t * abx), p.y - (a.y + t * aby))


def point_to_polyline(p: Vec2, polyline: list[Vec2]) -> float:
    """Minimum distance from a point to a polyline (its segments, not just nodes)."""
    if not polyline:
        raise ValueError("empty polyline")
    if len(polyline) == 1:
        return p.distance_to(polyline[0])
    return min(_point_segment_distance(p, a, b)
               for a, b in zip(polyline, polyline[1:]))
