"""2D geometry helpers: vectors, convex polygons, oriented rectangles, SAT overlap."""

from __future__ import annotations

import math

TWO_PI = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


def rotate(x: float, y: float, angle: float) -> tuple[float, float]:
    c = math.cos(angle)
    s = math.sin(angle)
    return (c * x - s * y, s * x + c * y)


def dist(p: tuple[float, float], q: tuple[float, float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def rect_corners(cx: float, cy: float, heading: float,
                 half_length: float, half_width: float) -> list[tuple[float, float]]:
    """Corners of an oriented rectangle, counter-clockwise."""
    c = math.cos(heading)
    s = math.sin(heading)
    lx, ly = half_length * c, half_length * s
    wx, wy = -half_width * s, half_width * c
    return [
        (cx + lx + wx, cy + ly + wy),
        (cx - lx + wx, cy - ly + wy),
        (cx - lx - wx, cy - ly - wy),
        (cx + lx - wx, cy + ly - wy),
    ]


def _project(poly: list[tuple[float, float]], ax: float, ay: float) -> tuple[float, float]:
    lo = hi = poly[0][0] * ax + poly[0][1] * ay
    for px, py in poly[1:]:
        d = px * ax + py * ay
        if d < lo:
            lo = d
        elif d > hi:
            hi = d
    return lo, hi


def convex_overlap(a: list[tuple[float, float]], b: list[tuple[float, float]]) -> bool:
    """Separating-axis test for two convex polygons (touching counts as overlap)."""
    for poly in (a, b):
        n = len(poly)
        for i in range(n):
            ex = poly[(i + 1) % n][0] - poly[i][0]
            ey = poly[(i + 1) % n][1] - poly[i][1]
            ax, ay = -ey, ex
            alo, ahi = _project(a, ax, ay)
            blo, bhi = _project(b, ax, ay)
            if ahi < blo or bhi < alo:
                return False
    return True


def point_in_convex(p: tuple[float, float], poly: list[tuple[float, float]]) -> bool:
    """Point-in-convex-polygon; polygon must be counter-clockwise. Boundary counts."""
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if (x1 - x0) * (p[1] - y0) - (y1 - y0) * (p[0] - x0) < 0.0:
            return False
    return True


def point_segment_distance(p: tuple[float, float], a: tuple[float, float],
                           b: tuple[float, float]) -> float:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / L2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


def point_polygon_distance(p: tuple[float, float], poly: list[tuple[float, float]]) -> float:
    """Distance from a point to a convex polygon (0 if inside)."""
    if point_in_convex(p, poly):
        return 0.0
    n = len(poly)
    return min(point_segment_distance(p, poly[i], poly[(i + 1) % n]) for i in range(n))


def polyline_arc_lengths(points: list[tuple[float, float]]) -> list[float]:
    """Cumulative arc length at each polyline vertex."""
    acc = [0.0]
    for i in range(1, len(points)):
        acc.append(acc[-1] + dist(points[i - 1], points[i]))
    return acc
