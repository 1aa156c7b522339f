"""Analytic centerline paths assembled from straight and arc segments.

Routes are authored in a route frame: s = arc length along the centerline,
lateral = signed offset (positive left of travel direction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import normalize_angle


@dataclass(frozen=True)
class _Straight:
    x0: float
    y0: float
    heading: float
    length: float

    def pose_at(self, s: float) -> tuple[float, float, float]:
        return (
            self.x0 + s * math.cos(self.heading),
            self.y0 + s * math.sin(self.heading),
            self.heading,
        )


@dataclass(frozen=True)
class _Arc:
    x0: float
    y0: float
    heading: float
    radius: float
    angle: float  # signed total turn, positive = left
    length: float

    def pose_at(self, s: float) -> tuple[float, float, float]:
        sign = 1.0 if self.angle >= 0 else -1.0
        cx = self.x0 - sign * self.radius * math.sin(self.heading)
        cy = self.y0 + sign * self.radius * math.cos(self.heading)
        dtheta = sign * s / self.radius
        h = self.heading + dtheta
        x = cx + sign * self.radius * math.sin(h)
        y = cy - sign * self.radius * math.cos(h)
        return (x, y, normalize_angle(h))


class Path:
    """Piecewise centerline; poses are exact per segment, s may extrapolate past both ends."""

    def __init__(self, segments: list[dict], start=(0.0, 0.0, 0.0)):
        self._parts = []
        x, y, h = start
        total = 0.0
        for seg in segments:
            if seg["kind"] == "straight":
                part = _Straight(x, y, h, seg["length"])
            elif seg["kind"] == "arc":
                angle = math.radians(seg["angle_deg"])
                length = abs(angle) * seg["radius"]
                part = _Arc(x, y, h, seg["radius"], angle, length)
            else:
                raise ValueError(f"unknown segment kind {seg['kind']}")
            self._parts.append((total, part))
            x, y, h = part.pose_at(part.length)
            total += part.length
        self.length = total
        self._end = (x, y, h)

    def pose_at(self, s: float) -> tuple[float, float, float]:
        if s <= 0.0:
            first = self._parts[0][1]
            x0, y0, h = first.pose_at(0.0)
            return (x0 + s * math.cos(h), y0 + s * math.sin(h), h)
        if s >= self.length:
            x, y, h = self._end
            d = s - self.length
            return (x + d * math.cos(h), y + d * math.sin(h), h)
        for start_s, part in reversed(self._parts):
            if s >= start_s:
                return part.pose_at(s - start_s)
        raise AssertionError("unreachable")

    def point_at(self, s: float, lateral: float = 0.0) -> tuple[float, float]:
        x, y, h = self.pose_at(s)
        return (x - lateral * math.sin(h), y + lateral * math.cos(h))

    def quad(self, s0: float, s1: float, l0: float, l1: float) -> tuple:
        """Counter-clockwise quad covering [s0, s1] x [l0, l1] in the route frame."""
        a = self.point_at(s0, l0)
        b = self.point_at(s1, l0)
        c = self.point_at(s1, l1)
        d = self.point_at(s0, l1)
        return (a, b, c, d)

    def waypoints(self, spacing: float = 5.0) -> list[tuple[float, float, float]]:
        n = int(math.floor(self.length / spacing))
        poses = [self.pose_at(i * spacing) for i in range(n + 1)]
        if self.length - n * spacing > 2.0:
            poses.append(self.pose_at(self.length))
        return poses

    def corridor(self, half_width: float, spacing: float = 5.0) -> list[tuple]:
        """Union of slightly overlapping quads along the centerline."""
        n = max(1, int(math.ceil(self.length / spacing)))
        quads = []
        for i in range(n):
            s0 = i * spacing
            s1 = min((i + 1) * spacing, self.length)
            # widen each quad a touch so arc chords stay covered
            quads.append(self.quad(s0 - 0.2, s1 + 0.2, -half_width, half_width))
        return quads
