"""Synthetic datasets with park-like and trajectory-like autocorrelation."""

from __future__ import annotations

import math

import numpy as np

from .geometry import BoundingBox, MultiPolygon, Polygon, Polyline


def _star_ring(rng, cx, cy, radius, n, wobble):
    """Closed star-shaped ring; radii stay positive, angles strictly increase,
    so the ring is simple."""
    theta = np.sort(rng.uniform(0, 2 * math.pi, n))
    theta = np.linspace(0, 2 * math.pi, n, endpoint=False) * 0.5 + theta * 0.5
    theta = np.unique(theta)
    r = np.ones_like(theta)
    for k, amp in enumerate(wobble, start=2):
        r += amp * np.cos(k * theta + rng.uniform(0, 2 * math.pi))
    r *= radius
    ring = np.column_stack([cx + r * np.cos(theta), cy + r * np.sin(theta)])
    return np.vstack([ring, ring[:1]]), float(r.min()), float(r.max())


def park_polygon(rng, cx, cy, radius, vertices=200, pond=False) -> Polygon:
    wobble = rng.uniform(0.0, 0.12, size=4)
    ext, rmin, _ = _star_ring(rng, cx, cy, radius, vertices, wobble)
    holes = []
    if pond:
        hr = rmin * rng.uniform(0.15, 0.3)
        hole, _, _ = _star_ring(rng, cx, cy, hr, max(8, vertices // 8), wobble * 0.5)
        holes.append(hole[::-1])
    return Polygon(ext, holes)


def park_suite(n_polygons: int = 10, extent: BoundingBox = BoundingBox(0, 0, 2000, 2000),
               vertices: int = 200, seed: int = 0, pond_fraction: float = 0.3,
               radius_range: tuple[float, float] = (60.0, 220.0)) -> list[MultiPolygon]:
    """Non-overlapping star-shaped parks, some with a pond hole.

    Each park is returned as a one-member MultiPolygon.
    """
    rng = np.random.default_rng(seed)
    placed: list[tuple[float, float, float]] = []
    parks = []
    attempts = 0
    while len(parks) < n_polygons:
        attempts += 1
        if attempts > 10000 * n_polygons:
            raise ValueError("could not place parks; extent too small")
        radius = rng.uniform(*radius_range)
        reach = radius * 1.5
        if 2 * reach >= min(extent.width, extent.height):
            continue
        cx = rng.uniform(extent.xmin + reach, extent.xmax - reach)
        cy = rng.uniform(extent.ymin + reach, extent.ymax - reach)
        if any(math.hypot(cx - x, cy - y) < reach + r for x, y, r in placed):
            continue
        placed.append((cx, cy, reach))
        parks.append(MultiPolygon([park_polygon(rng, cx, cy, radius, vertices,
                                                pond=rng.random() < pond_fraction)]))
    return parks


def trajectories(n_lines: int = 100, extent: BoundingBox = BoundingBox(0, 0, 2000, 2000),
                 vertices: int = 50, step: float = 15.0, seed: int = 0) -> list[Polyline]:
    """Random walks with a slowly turning heading, clipped to stay inside
    the extent by reflection."""
    rng = np.random.default_rng(seed)
    lines = []
    for _ in range(n_lines):
        x = rng.uniform(extent.xmin, extent.xmax)
        y = rng.uniform(extent.ymin, extent.ymax)
        heading = rng.uniform(0, 2 * math.pi)
        pts = [(x, y)]
        for _ in range(vertices - 1):
            heading += rng.normal(0, 0.3)
            nx = x + step * math.cos(heading)
            ny = y + step * math.sin(heading)
            if not (extent.xmin < nx < extent.xmax):
                heading = math.pi - heading
                nx = x + step * math.cos(heading)
            if not (extent.ymin < ny < extent.ymax):
                heading = -heading
                ny = y + step * math.sin(heading)
            x, y = nx, ny
            pts.append((x, y))
        lines.append(Polyline(pts))
    return lines
