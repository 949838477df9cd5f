"""Independent reference implementations used only to check the package.

Each one deliberately takes a different route than the code it verifies:
upward rays instead of rightward ones, supersampling instead of clipping,
Liang-Barsky instead of strip walking, top-down recursion instead of the
level pyramid.
"""

from __future__ import annotations

import math

import numpy as np


def on_segment(p, a, b, eps=1e-9) -> bool:
    ax, ay = a
    bx, by = b
    px, py = p
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    seg = math.hypot(bx - ax, by - ay)
    if seg == 0:
        return math.hypot(px - ax, py - ay) <= eps
    if abs(cross) / seg > eps:
        return False
    dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay)
    return -eps * seg <= dot <= seg * seg + eps * seg


def crossing_parity_upward(p, rings) -> bool:
    """Even-odd test with a vertical ray towards +y; boundary counts inside."""
    px, py = p
    inside = False
    for ring in rings:
        pts = [tuple(v) for v in ring]
        for a, b in zip(pts, pts[1:]):
            if on_segment(p, a, b):
                return True
            (ax, ay), (bx, by) = a, b
            if (ax > px) != (bx > px):
                y = ay + (px - ax) * (by - ay) / (bx - ax)
                if y > py:
                    inside = not inside
    return inside


def fan_area(ring) -> float:
    """Area of a convex ring by summing fan triangles from its first vertex."""
    pts = [tuple(v) for v in ring][:-1]
    o = pts[0]
    total = 0.0
    for a, b in zip(pts[1:], pts[2:]):
        total += abs((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])) / 2
    return total


def supersampled_area(rings, rect, n=1024) -> float:
    """Area of ring-set ∩ rect from an n x n grid of sample centers."""
    xmin, ymin, xmax, ymax = rect
    xs = xmin + (np.arange(n) + 0.5) * (xmax - xmin) / n
    ys = ymin + (np.arange(n) + 0.5) * (ymax - ymin) / n
    gx, gy = np.meshgrid(xs, ys)
    inside = np.zeros(gx.shape, dtype=bool)
    for ring in rings:
        r = np.asarray(ring)
        for (ax, ay), (bx, by) in zip(r[:-1], r[1:]):
            if ax == bx:
                continue
            straddle = (ax > gx) != (bx > gx)
            y = ay + (gx - ax) * (by - ay) / (bx - ax)
            inside ^= straddle & (y > gy)
    return inside.mean() * (xmax - xmin) * (ymax - ymin)


def segment_meets_rect(a, b, rect) -> bool:
    """Liang-Barsky: does the closed segment a-b meet the closed rectangle?"""
    xmin, ymin, xmax, ymax = rect
    x0, y0 = a
    dx, dy = b[0] - x0, b[1] - y0
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, x0 - xmin), (dx, xmax - x0), (-dy, y0 - ymin), (dy, ymax - y0)):
        if p == 0:
            if q < 0:
                return False
            continue
        t = q / p
        if p < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return False
    return True


def all_cells_polyline(vertices, spec) -> set:
    """Every cell whose closed rectangle meets any segment, by brute force."""
    cells = set()
    res = spec.resolution
    pts = [tuple(v) for v in vertices]
    for row in range(spec.nrows):
        for col in range(spec.ncols):
            rect = (spec.xmin + col * res, spec.ymax - (row + 1) * res,
                    spec.xmin + (col + 1) * res, spec.ymax - row * res)
            if any(segment_meets_rect(a, b, rect) for a, b in zip(pts, pts[1:])):
                cells.add((row, col))
    return cells


def coverage_by_subsampling(rings, spec, k=32) -> np.ndarray:
    """Per-cell coverage estimate from k x k sample centers per cell."""
    res = spec.resolution
    nx, ny = spec.ncols * k, spec.nrows * k
    xs = spec.xmin + (np.arange(nx) + 0.5) * res / k
    ys = spec.ymax - (np.arange(ny) + 0.5) * res / k
    gx, gy = np.meshgrid(xs, ys)
    inside = np.zeros(gx.shape, dtype=bool)
    for ring in rings:
        r = np.asarray(ring)
        for (ax, ay), (bx, by) in zip(r[:-1], r[1:]):
            if ax == bx:
                continue
            straddle = (ax > gx) != (bx > gx)
            y = ay + (gx - ax) * (by - ay) / (bx - ax)
            inside ^= straddle & (y > gy)
    return inside.reshape(spec.nrows, k, spec.ncols, k).mean(axis=(1, 3))


def reference_tree(grid: np.ndarray, r0=0, c0=0, size=None):
    """Top-down recursive region quadtree as nested tuples (NW, NE, SW, SE)."""
    if size is None:
        size = grid.shape[0]
    block = grid[r0:r0 + size, c0:c0 + size]
    first = block.flat[0]
    if np.all(block == first):
        return int(first)
    h = size // 2
    return (reference_tree(grid, r0, c0, h), reference_tree(grid, r0, c0 + h, h),
            reference_tree(grid, r0 + h, c0, h), reference_tree(grid, r0 + h, c0 + h, h))


def pad_to_square(values: np.ndarray, nodata: int) -> np.ndarray:
    n = max(values.shape)
    side = 1
    while side < n:
        side *= 2
    out = np.full((side, side), nodata, dtype=values.dtype)
    out[:values.shape[0], :values.shape[1]] = values
    return out


def nested_node_count(t) -> int:
    if isinstance(t, tuple):
        return 1 + sum(nested_node_count(k) for k in t)
    return 1


def nested_leaf_count(t) -> int:
    if isinstance(t, tuple):
        return sum(nested_leaf_count(k) for k in t)
    return 1


def to_nested(qt):
    """Convert a package quadtree into nested tuples by walking QuadNode views."""
    def walk(node):
        if node.is_leaf:
            return node.value
        return tuple(walk(c) for c in node.children)
    return walk(qt.root)
