"""Planar vector geometry and the exact point-membership predicates.

Coordinates are double-precision meters in one projected CRS. All types are
immutable after construction. Scalar predicates operate on one point; the
``*_many`` variants evaluate an ``(n, 2)`` array of points and are what the
benchmark's vector baseline uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Distance below which a point counts as lying on a ring or segment.
BOUNDARY_EPS = 1e-9

_CHUNK = 512


class GeometryError(ValueError):
    """Raised when a geometry violates its construction invariants."""


@dataclass(frozen=True, slots=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite coordinate ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def __len__(self):
        return 2

    def __getitem__(self, i):
        return (self.x, self.y)[i]


@dataclass(frozen=True, slots=True)
class BoundingBox:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise GeometryError(f"degenerate bounding box {self}")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def contains_box(self, other: "BoundingBox") -> bool:
        return (self.xmin <= other.xmin and other.xmax <= self.xmax
                and self.ymin <= other.ymin and other.ymax <= self.ymax)


def _as_coords(points: Iterable) -> np.ndarray:
    arr = np.array([tuple(p) for p in points], dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError("expected a sequence of (x, y) pairs")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("non-finite coordinate")
    return arr


def _consecutive_duplicates(coords: np.ndarray) -> bool:
    return bool(np.any(np.all(coords[1:] == coords[:-1], axis=1)))


def signed_ring_area(coords: np.ndarray) -> float:
    """Shoelace area of a closed ring (first == last); positive if CCW."""
    x, y = coords[:, 0], coords[:, 1]
    return 0.5 * float(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1]))


def _ring_self_intersects(coords: np.ndarray) -> bool:
    """Segment-pair test over non-adjacent edges, touching counts."""
    a = coords[:-1]
    b = coords[1:]
    n = len(a)
    if n < 4:
        return False
    d = b - a
    for start in range(0, n, _CHUNK):
        i = np.arange(start, min(start + _CHUNK, n))[:, None]
        j = np.arange(n)[None, :]
        # i < j, skip neighbours (including the wrap-around pair)
        mask = (j > i + 1) & ~((i == 0) & (j == n - 1))
        if not mask.any():
            continue
        ai, di = a[i[:, 0]][:, None, :], d[i[:, 0]][:, None, :]
        aj, bj, dj = a[None, :, :], b[None, :, :], d[None, :, :]
        bi = ai + di
        o1 = di[..., 0] * (aj[..., 1] - ai[..., 1]) - di[..., 1] * (aj[..., 0] - ai[..., 0])
        o2 = di[..., 0] * (bj[..., 1] - ai[..., 1]) - di[..., 1] * (bj[..., 0] - ai[..., 0])
        o3 = dj[..., 0] * (ai[..., 1] - aj[..., 1]) - dj[..., 1] * (ai[..., 0] - aj[..., 0])
        o4 = dj[..., 0] * (bi[..., 1] - aj[..., 1]) - dj[..., 1] * (bi[..., 0] - aj[..., 0])
        proper = (o1 * o2 < 0) & (o3 * o4 < 0)

        def within(p, q, r):
            # r inside the bounding box of segment pq
            return ((np.minimum(p[..., 0], q[..., 0]) <= r[..., 0])
                    & (r[..., 0] <= np.maximum(p[..., 0], q[..., 0]))
                    & (np.minimum(p[..., 1], q[..., 1]) <= r[..., 1])
                    & (r[..., 1] <= np.maximum(p[..., 1], q[..., 1])))

        touch = (((o1 == 0) & within(ai, bi, aj)) | ((o2 == 0) & within(ai, bi, bj))
                 | ((o3 == 0) & within(aj, bj, ai)) | ((o4 == 0) & within(aj, bj, bi)))
        if np.any((proper | touch) & mask):
            return True
    return False


def _validate_ring(coords: np.ndarray, what: str) -> None:
    if len(coords) < 4:
        raise GeometryError(f"{what} needs at least 4 positions, got {len(coords)}")
    if not np.array_equal(coords[0], coords[-1]):
        raise GeometryError(f"{what} is not closed (first != last)")
    if _consecutive_duplicates(coords):
        raise GeometryError(f"{what} has consecutive duplicate vertices")
    if signed_ring_area(coords) == 0.0:
        raise GeometryError(f"{what} has zero area")
    if _ring_self_intersects(coords):
        raise GeometryError(f"{what} self-intersects")


@dataclass(frozen=True, eq=False)
class Polyline:
    vertices: np.ndarray

    def __init__(self, vertices: Iterable):
        coords = _as_coords(vertices)
        if len(coords) < 2:
            raise GeometryError("polyline needs at least 2 vertices")
        if _consecutive_duplicates(coords):
            raise GeometryError("polyline has consecutive duplicate vertices")
        coords.setflags(write=False)
        object.__setattr__(self, "vertices", coords)

    def __eq__(self, other):
        return isinstance(other, Polyline) and np.array_equal(self.vertices, other.vertices)

    def __hash__(self):
        return hash(self.vertices.tobytes())

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    @property
    def length(self) -> float:
        return float(np.hypot(*np.diff(self.vertices, axis=0).T).sum())


@dataclass(frozen=True, eq=False)
class Polygon:
    """Exterior ring plus optional holes; every ring is closed (first == last)."""

    exterior: np.ndarray
    holes: tuple[np.ndarray, ...] = field(default=())

    def __init__(self, exterior: Iterable, holes: Iterable[Iterable] = ()):
        ext = _as_coords(exterior)
        _validate_ring(ext, "exterior ring")
        hole_arrays = []
        for k, h in enumerate(holes):
            arr = _as_coords(h)
            _validate_ring(arr, f"hole {k}")
            arr.setflags(write=False)
            hole_arrays.append(arr)
        ext.setflags(write=False)
        object.__setattr__(self, "exterior", ext)
        object.__setattr__(self, "holes", tuple(hole_arrays))

    @property
    def rings(self) -> tuple[np.ndarray, ...]:
        return (self.exterior,) + self.holes

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.exterior.min(axis=0)
        hi = self.exterior.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    @property
    def perimeter(self) -> float:
        return sum(float(np.hypot(*np.diff(r, axis=0).T).sum()) for r in self.rings)

    @property
    def vertex_count(self) -> int:
        return sum(len(r) - 1 for r in self.rings)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end points of every ring edge, stacked."""
        starts = np.concatenate([r[:-1] for r in self.rings])
        ends = np.concatenate([r[1:] for r in self.rings])
        return starts, ends

    def __eq__(self, other):
        return (isinstance(other, Polygon) and len(self.holes) == len(other.holes)
                and all(np.array_equal(a, b) for a, b in zip(self.rings, other.rings)))

    def __hash__(self):
        return hash(tuple(r.tobytes() for r in self.rings))


@dataclass(frozen=True)
class MultiPolygon:
    polygons: tuple[Polygon, ...]

    def __init__(self, polygons: Iterable[Polygon]):
        polys = tuple(polygons)
        if not polys:
            raise GeometryError("multipolygon needs at least one member")
        object.__setattr__(self, "polygons", polys)

    def __iter__(self):
        return iter(self.polygons)

    def __len__(self):
        return len(self.polygons)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        boxes = np.array([p.bbox for p in self.polygons])
        return (float(boxes[:, 0].min()), float(boxes[:, 1].min()),
                float(boxes[:, 2].max()), float(boxes[:, 3].max()))


# --- scalar predicates -----------------------------------------------------

def _segment_distance(px, py, ax, ay, bx, by) -> float:
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg2
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def point_segment_distance(p, a, b) -> float:
    return _segment_distance(p[0], p[1], a[0], a[1], b[0], b[1])


def _on_ring(px: float, py: float, ring: np.ndarray) -> bool:
    pts = ring.tolist()
    for (ax, ay), (bx, by) in zip(pts, pts[1:]):
        if _segment_distance(px, py, ax, ay, bx, by) <= BOUNDARY_EPS:
            return True
    return False


def _crossings(px: float, py: float, ring: np.ndarray) -> int:
    pts = ring.tolist()
    count = 0
    for (ax, ay), (bx, by) in zip(pts, pts[1:]):
        # half-open in y: an endpoint counts only if it lies strictly above the ray
        if (ay > py) != (by > py):
            xint = ax + (py - ay) * (bx - ax) / (by - ay)
            if px < xint:
                count += 1
    return count


def point_in_polygon(p, poly: Polygon) -> bool:
    """Boundary-inclusive even-odd test of ``p`` against ``poly``."""
    px, py = float(p[0]), float(p[1])
    xmin, ymin, xmax, ymax = poly.bbox
    if not (xmin - BOUNDARY_EPS <= px <= xmax + BOUNDARY_EPS
            and ymin - BOUNDARY_EPS <= py <= ymax + BOUNDARY_EPS):
        return False
    for ring in poly.rings:
        if _on_ring(px, py, ring):
            return True
    crossings = sum(_crossings(px, py, ring) for ring in poly.rings)
    return crossings % 2 == 1


def point_in_multipolygon(p, mp: MultiPolygon) -> bool:
    return any(point_in_polygon(p, poly) for poly in mp.polygons)


def point_near_polyline(p, line: Polyline, tol: float) -> bool:
    if tol < 0:
        raise ValueError(f"tolerance must be non-negative, got {tol}")
    px, py = float(p[0]), float(p[1])
    pts = line.vertices.tolist()
    return any(_segment_distance(px, py, ax, ay, bx, by) <= tol
               for (ax, ay), (bx, by) in zip(pts, pts[1:]))


# --- vectorised predicates ---------------------------------------------------

def _segment_distances(xy: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(n, m) distances from n points to m segments."""
    d = b - a
    seg2 = np.einsum("ij,ij->i", d, d)
    seg2 = np.where(seg2 == 0.0, 1.0, seg2)
    rx = xy[:, None, 0] - a[None, :, 0]
    ry = xy[:, None, 1] - a[None, :, 1]
    t = np.clip((rx * d[None, :, 0] + ry * d[None, :, 1]) / seg2[None, :], 0.0, 1.0)
    ex = rx - t * d[None, :, 0]
    ey = ry - t * d[None, :, 1]
    return np.hypot(ex, ey)


def _points_in_polygon_block(xy: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    px = xy[:, None, 0]
    py = xy[:, None, 1]
    ay, by = a[None, :, 1], b[None, :, 1]
    straddle = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = a[None, :, 0] + (py - ay) * (b[None, :, 0] - a[None, :, 0]) / (by - ay)
    inside = (np.count_nonzero(straddle & (px < xint), axis=1) % 2) == 1
    on_edge = (_segment_distances(xy, a, b) <= BOUNDARY_EPS).any(axis=1)
    return inside | on_edge


def points_in_polygon(xy: np.ndarray, poly: Polygon, max_pairs: int = 1 << 21) -> np.ndarray:
    """Vectorised ``point_in_polygon`` over an ``(n, 2)`` array."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    out = np.zeros(len(xy), dtype=bool)
    xmin, ymin, xmax, ymax = poly.bbox
    cand = np.flatnonzero((xy[:, 0] >= xmin - BOUNDARY_EPS) & (xy[:, 0] <= xmax + BOUNDARY_EPS)
                          & (xy[:, 1] >= ymin - BOUNDARY_EPS) & (xy[:, 1] <= ymax + BOUNDARY_EPS))
    if cand.size == 0:
        return out
    a, b = poly.edges()
    step = max(1, max_pairs // len(a))
    for s in range(0, cand.size, step):
        idx = cand[s:s + step]
        out[idx] = _points_in_polygon_block(xy[idx], a, b)
    return out


def points_in_multipolygon(xy: np.ndarray, mp: MultiPolygon) -> np.ndarray:
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    out = np.zeros(len(xy), dtype=bool)
    for poly in mp.polygons:
        pending = ~out
        if not pending.any():
            break
        idx = np.flatnonzero(pending)
        out[idx] |= points_in_polygon(xy[idx], poly)
    return out


def points_near_polyline(xy: np.ndarray, line: Polyline, tol: float,
                         max_pairs: int = 1 << 21) -> np.ndarray:
    if tol < 0:
        raise ValueError(f"tolerance must be non-negative, got {tol}")
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    out = np.zeros(len(xy), dtype=bool)
    xmin, ymin, xmax, ymax = line.bbox
    cand = np.flatnonzero((xy[:, 0] >= xmin - tol) & (xy[:, 0] <= xmax + tol)
                          & (xy[:, 1] >= ymin - tol) & (xy[:, 1] <= ymax + tol))
    if cand.size == 0:
        return out
    a, b = line.vertices[:-1], line.vertices[1:]
    step = max(1, max_pairs // len(a))
    for s in range(0, cand.size, step):
        idx = cand[s:s + step]
        out[idx] = (_segment_distances(xy[idx], a, b) <= tol).any(axis=1)
    return out


# --- area and clipping -------------------------------------------------------

def polygon_area(poly: Polygon) -> float:
    return abs(signed_ring_area(poly.exterior)) - sum(abs(signed_ring_area(h)) for h in poly.holes)


def _clip_halfplane(pts: list, axis: int, bound: float, keep_less: bool) -> list:
    """One Sutherland-Hodgman pass against an axis-aligned half-plane."""
    if not pts:
        return pts
    out = []
    prev = pts[-1]
    prev_in = prev[axis] <= bound if keep_less else prev[axis] >= bound
    for cur in pts:
        cur_in = cur[axis] <= bound if keep_less else cur[axis] >= bound
        if cur_in != prev_in:
            t = (bound - prev[axis]) / (cur[axis] - prev[axis])
            if axis == 0:
                out.append((bound, prev[1] + t * (cur[1] - prev[1])))
            else:
                out.append((prev[0] + t * (cur[0] - prev[0]), bound))
        if cur_in:
            out.append(cur)
        prev, prev_in = cur, cur_in
    return out


def clip_ring_to_rect(ring: Sequence, xmin: float, ymin: float, xmax: float, ymax: float) -> list:
    """Clip an open vertex list (no repeated closing vertex) to a rectangle."""
    pts = list(ring)
    pts = _clip_halfplane(pts, 0, xmin, keep_less=False)
    pts = _clip_halfplane(pts, 0, xmax, keep_less=True)
    pts = _clip_halfplane(pts, 1, ymin, keep_less=False)
    pts = _clip_halfplane(pts, 1, ymax, keep_less=True)
    return pts


def open_ring_area(pts: Sequence) -> float:
    """Unsigned shoelace area of an open vertex list."""
    n = len(pts)
    if n < 3:
        return 0.0
    s = 0.0
    x0, y0 = pts[-1]
    for x1, y1 in pts:
        s += x0 * y1 - x1 * y0
        x0, y0 = x1, y1
    return abs(s) * 0.5


def clip_polygon_to_rect(poly: Polygon, rect: BoundingBox) -> float:
    """Area of ``poly`` intersected with ``rect``; holes are subtracted."""
    pxmin, pymin, pxmax, pymax = poly.bbox
    if pxmax <= rect.xmin or pxmin >= rect.xmax or pymax <= rect.ymin or pymin >= rect.ymax:
        return 0.0
    box = (rect.xmin, rect.ymin, rect.xmax, rect.ymax)
    area = open_ring_area(clip_ring_to_rect(map(tuple, poly.exterior[:-1].tolist()), *box))
    for hole in poly.holes:
        area -= open_ring_area(clip_ring_to_rect(map(tuple, hole[:-1].tolist()), *box))
    return max(area, 0.0)


# --- boundary sampling -------------------------------------------------------

def _boundary_segments(geoms) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Segments of all rings (and polylines) in order, with cumulative length."""
    starts, ends = [], []
    for g in geoms:
        if isinstance(g, MultiPolygon):
            for poly in g.polygons:
                for ring in poly.rings:
                    starts.append(ring[:-1])
                    ends.append(ring[1:])
        elif isinstance(g, Polygon):
            for ring in g.rings:
                starts.append(ring[:-1])
                ends.append(ring[1:])
        elif isinstance(g, Polyline):
            starts.append(g.vertices[:-1])
            ends.append(g.vertices[1:])
    if not starts:
        raise GeometryError("no boundary to sample from")
    a = np.concatenate(starts)
    b = np.concatenate(ends)
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(*(b - a).T))])
    return a, b, cum


def points_at_arclength(geoms, positions: np.ndarray) -> np.ndarray:
    """Map arc-length positions along the concatenated boundaries to points."""
    a, b, cum = _boundary_segments(geoms)
    positions = np.asarray(positions, dtype=float)
    seg = np.clip(np.searchsorted(cum, positions, side="right") - 1, 0, len(a) - 1)
    length = cum[seg + 1] - cum[seg]
    t = np.clip((positions - cum[seg]) / length, 0.0, 1.0)
    return a[seg] + t[:, None] * (b[seg] - a[seg])


def boundary_length(geoms) -> float:
    return float(_boundary_segments(geoms)[2][-1])


def sample_boundary_points(mp, n: int, seed: int) -> np.ndarray:
    """``n`` points uniform by arc length over all rings of ``mp``.

    ``mp`` may be a MultiPolygon or a list of geometries; polylines contribute
    their length as well. Returns an ``(n, 2)`` array.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    geoms = [mp] if isinstance(mp, (MultiPolygon, Polygon, Polyline)) else list(mp)
    total = boundary_length(geoms)
    rng = np.random.default_rng(seed)
    return points_at_arclength(geoms, rng.uniform(0.0, total, size=n))
