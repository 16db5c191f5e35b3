"""Planar geometry used by the answer oracle and model inspection."""

from __future__ import annotations

import math

from .model import Point3, Slab, Wall


def distance(a: Point3, b: Point3) -> float:
    return math.sqrt((b.x - a.x) ** 2 + (b.y - a.y) ** 2 + (b.z - a.z) ** 2)


def shoelace_area(pts) -> float:
    n = len(pts)
    s = 0.0
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2.0


def slab_xy(slab: Slab) -> list[tuple[int, int]]:
    return [(p.x, p.y) for p in slab.outline]


def is_rectangle(pts, tol: float = 1e-9) -> bool:
    """Four vertices with every pair of consecutive edges perpendicular."""
    if len(pts) != 4:
        return False
    for i in range(4):
        ax, ay = pts[(i + 1) % 4][0] - pts[i][0], pts[(i + 1) % 4][1] - pts[i][1]
        bx, by = pts[(i + 2) % 4][0] - pts[(i + 1) % 4][0], pts[(i + 2) % 4][1] - pts[(i + 1) % 4][1]
        na, nb = math.hypot(ax, ay), math.hypot(bx, by)
        if na == 0 or nb == 0:
            return False
        if abs(ax * bx + ay * by) / (na * nb) > tol:
            return False
    return True


def rectangle_area(pts) -> float:
    """Area of a rectangle as the product of two adjacent edge lengths."""
    a = math.hypot(pts[1][0] - pts[0][0], pts[1][1] - pts[0][1])
    b = math.hypot(pts[2][0] - pts[1][0], pts[2][1] - pts[1][1])
    return a * b


def wall_direction(w: Wall) -> tuple[int, int]:
    return (w.end.x - w.start.x, w.end.y - w.start.y)


def axis_direction(w: Wall) -> str | None:
    """One of the four axis phrases, or None for a non-axis-aligned wall."""
    dx, dy = wall_direction(w)
    if dx == 0 and dy != 0:
        return "along the positive y-axis" if dy > 0 else "along the negative y-axis"
    if dy == 0 and dx != 0:
        return "along the positive x-axis" if dx > 0 else "along the negative x-axis"
    return None


def orientation(a: Wall, b: Wall, tol: float = 1e-9) -> str:
    """``parallel``, ``perpendicular`` or ``neither`` for two walls in plan."""
    ax, ay = wall_direction(a)
    bx, by = wall_direction(b)
    na, nb = math.hypot(ax, ay), math.hypot(bx, by)
    if na == 0 or nb == 0:
        return "neither"
    sin = abs(ax * by - ay * bx) / (na * nb)
    cos = abs(ax * bx + ay * by) / (na * nb)
    if sin <= tol:
        return "parallel"
    if cos <= tol:
        return "perpendicular"
    return "neither"


def wall_rectangle(w: Wall) -> list[tuple[float, float]]:
    """Plan footprint: the centerline offset by half the thickness on both sides."""
    dx, dy = wall_direction(w)
    n = math.hypot(dx, dy)
    ox, oy = -dy / n * w.thickness_mm / 2, dx / n * w.thickness_mm / 2
    sx, sy, ex, ey = w.start.x, w.start.y, w.end.x, w.end.y
    return [(sx + ox, sy + oy), (ex + ox, ey + oy), (ex - ox, ey - oy), (sx - ox, sy - oy)]


def _axes(poly):
    out = []
    for i in range(len(poly)):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % len(poly)]
        ex, ey = x1 - x0, y1 - y0
        n = math.hypot(ex, ey)
        if n:
            out.append((-ey / n, ex / n))
    return out


def _project(poly, axis):
    dots = [p[0] * axis[0] + p[1] * axis[1] for p in poly]
    return min(dots), max(dots)


def convex_overlap(p, q, touching_counts: bool = False, eps: float = 1e-6) -> bool:
    """Separating-axis test for two convex polygons.

    With ``touching_counts`` False only interpenetration (positive area) is an
    overlap; shared edges or corners are not.
    """
    for axis in _axes(p) + _axes(q):
        pmin, pmax = _project(p, axis)
        qmin, qmax = _project(q, axis)
        gap = min(pmax, qmax) - max(pmin, qmin)
        if touching_counts:
            if gap < -eps:
                return False
        elif gap <= eps:
            return False
    return True


def walls_overlap(a: Wall, b: Wall, touching_counts: bool = False) -> bool:
    return convex_overlap(wall_rectangle(a), wall_rectangle(b), touching_counts)
