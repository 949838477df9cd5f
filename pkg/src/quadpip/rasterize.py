"""Vector to raster conversion onto a given :class:`GridSpec`.

Points set the cell they fall into. Polylines set every cell whose closed
rectangle meets a segment. Polygons are decided per cell by a
:class:`CoverageRule`; only cells touched by a ring need exact clipping,
all other cells are wholly inside or outside and are resolved by a
scanline parity pass over cell centers.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .geometry import (
    MultiPolygon,
    Point2D,
    Polygon,
    Polyline,
    _clip_halfplane,
    clip_ring_to_rect,
    open_ring_area,
    point_in_polygon,
)
from .grid import NODATA, GridSpec, Raster, cell_center, cells_of_points

log = logging.getLogger(__name__)

AREA_FRACTION = "area-fraction"
CENTER = "center-in-polygon"


@dataclass(frozen=True)
class CoverageRule:
    mode: str = AREA_FRACTION
    threshold: float = 0.5

    def __post_init__(self):
        if self.mode not in (AREA_FRACTION, CENTER):
            raise ValueError(f"unknown coverage mode {self.mode!r}")
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in (0, 1], got {self.threshold}")

    @classmethod
    def from_name(cls, name: str) -> "CoverageRule":
        """Map the CLI spellings ``area50`` and ``center`` to a rule."""
        if name == "area50":
            return cls(AREA_FRACTION, 0.5)
        if name == "center":
            return cls(CENTER)
        raise ValueError(f"unknown rule {name!r}; expected area50 or center")


DEFAULT_RULE = CoverageRule()


def _check_value(value: int) -> None:
    if value == 0 or value == NODATA:
        raise ValueError(f"feature value must be nonzero and not nodata, got {value}")


def _as_raster(spec: GridSpec, mask: np.ndarray, value: int) -> Raster:
    return Raster(spec, np.where(mask, np.int32(value), np.int32(0)))


# --- points ------------------------------------------------------------------

def _points_mask(pts, spec: GridSpec) -> np.ndarray:
    mask = np.zeros(spec.shape, dtype=bool)
    xy = np.asarray([tuple(p) for p in pts] if not isinstance(pts, np.ndarray) else pts,
                    dtype=float).reshape(-1, 2)
    if len(xy) == 0:
        return mask
    rows, cols, valid = cells_of_points(spec, xy)
    dropped = int(np.count_nonzero(~valid))
    if dropped:
        log.warning("%d of %d points outside the grid extent were ignored", dropped, len(xy))
    mask[rows[valid], cols[valid]] = True
    return mask


def rasterize_points(pts, value: int, spec: GridSpec) -> Raster:
    _check_value(value)
    return _as_raster(spec, _points_mask(pts, spec), value)


# --- polylines ---------------------------------------------------------------

def segment_cell_runs(spec: GridSpec, ax: float, ay: float, bx: float, by: float
                      ) -> Iterator[tuple[int, int, int]]:
    """Yield ``(col, row_lo, row_hi)`` runs of cells whose closed rectangle
    meets the segment ``a-b``, clipped to the grid.

    The segment is walked one column strip at a time; within a strip the
    sub-segment spans a y-interval, and every row whose closed y-range
    overlaps it is touched.
    """
    res, gx, gy = spec.resolution, spec.xmin, spec.ymax
    sx_lo, sx_hi = (ax, bx) if ax <= bx else (bx, ax)
    c_lo = max(0, math.floor((sx_lo - gx) / res) - 1)
    c_hi = min(spec.ncols - 1, math.floor((sx_hi - gx) / res) + 1)
    vertical = ax == bx
    slope = 0.0 if vertical else (by - ay) / (bx - ax)
    for c in range(c_lo, c_hi + 1):
        cx0 = gx + c * res
        cx1 = gx + (c + 1) * res
        lo = sx_lo if sx_lo > cx0 else cx0
        hi = sx_hi if sx_hi < cx1 else cx1
        if lo > hi:
            continue
        if vertical:
            ylo, yhi = (ay, by) if ay <= by else (by, ay)
        else:
            y0 = ay + (lo - ax) * slope
            y1 = ay + (hi - ax) * slope
            if lo == sx_lo:
                y0 = ay if ax == sx_lo else by
            if hi == sx_hi:
                y1 = by if bx == sx_hi else ay
            ylo, yhi = (y0, y1) if y0 <= y1 else (y1, y0)
        r_lo = max(0, math.floor((gy - yhi) / res) - 1)
        r_hi = min(spec.nrows - 1, math.floor((gy - ylo) / res) + 1)
        while r_lo <= r_hi and gy - (r_lo + 1) * res > yhi:
            r_lo += 1
        while r_hi >= r_lo and gy - r_hi * res < ylo:
            r_hi -= 1
        if r_lo <= r_hi:
            yield c, r_lo, r_hi


def _mark_path(mask: np.ndarray, spec: GridSpec, coords: np.ndarray,
               row_off: int = 0, col_off: int = 0) -> None:
    pts = coords.tolist()
    for (ax, ay), (bx, by) in zip(pts, pts[1:]):
        for c, r0, r1 in segment_cell_runs(spec, ax, ay, bx, by):
            mask[r0 - row_off:r1 + 1 - row_off, c - col_off] = True


def _polyline_mask(line: Polyline, spec: GridSpec) -> np.ndarray:
    mask = np.zeros(spec.shape, dtype=bool)
    _mark_path(mask, spec, line.vertices)
    return mask


def rasterize_polyline(line: Polyline, value: int, spec: GridSpec) -> Raster:
    _check_value(value)
    return _as_raster(spec, _polyline_mask(line, spec), value)


# --- polygons ----------------------------------------------------------------

def _window(spec: GridSpec, bbox) -> tuple[int, int, int, int] | None:
    """Inclusive ``(r0, r1, c0, c1)`` cell window covering ``bbox``."""
    xmin, ymin, xmax, ymax = bbox
    res = spec.resolution
    c0 = max(0, math.floor((xmin - spec.xmin) / res) - 1)
    c1 = min(spec.ncols - 1, math.floor((xmax - spec.xmin) / res) + 1)
    r0 = max(0, math.floor((spec.ymax - ymax) / res) - 1)
    r1 = min(spec.nrows - 1, math.floor((spec.ymax - ymin) / res) + 1)
    if c0 > c1 or r0 > r1:
        return None
    return r0, r1, c0, c1


def _center_parity(poly: Polygon, spec: GridSpec, win) -> np.ndarray:
    """Even-odd inside flags for the cell centers of a window.

    Uses the same half-open crossing rule as ``point_in_polygon``; exact
    only for cells the boundary does not touch, which is all it is used for.
    """
    r0, r1, c0, c1 = win
    nr, nc = r1 - r0 + 1, c1 - c0 + 1
    res = spec.resolution
    a, b = poly.edges()
    ylo = np.minimum(a[:, 1], b[:, 1])
    yhi = np.maximum(a[:, 1], b[:, 1])
    # rows whose center y satisfies ylo <= y < yhi
    first = np.floor((spec.ymax - yhi) / res - 0.5).astype(np.int64) + 1
    last = np.floor((spec.ymax - ylo) / res - 0.5).astype(np.int64)
    first = np.maximum(first, r0)
    last = np.minimum(last, r1)
    span = np.maximum(last - first + 1, 0)
    counts = np.zeros((nr, nc + 1), dtype=np.int32)
    total = int(span.sum())
    if total:
        edge = np.repeat(np.arange(len(a)), span)
        offs = np.arange(total) - np.repeat(np.cumsum(span) - span, span)
        rows = first[edge] + offs
        yc = spec.ymax - (rows + 0.5) * res
        ea, eb = a[edge], b[edge]
        xint = ea[:, 0] + (yc - ea[:, 1]) * (eb[:, 0] - ea[:, 0]) / (eb[:, 1] - ea[:, 1])
        # centers strictly left of the crossing are toggled
        k = np.ceil((xint - spec.xmin) / res - 0.5).astype(np.int64)
        k = np.clip(k, c0, c1 + 1) - c0
        np.add.at(counts, (rows - r0, np.zeros_like(k)), 1)
        np.add.at(counts, (rows - r0, k), -1)
    return (np.cumsum(counts, axis=1)[:, :nc] % 2) == 1


def _any_in(sorted_idx: list, lo: int, hi: int) -> bool:
    k = bisect.bisect_left(sorted_idx, lo)
    return k < len(sorted_idx) and sorted_idx[k] <= hi


def _split_rows(pts, spec, lo, hi, wanted) -> Iterator[tuple[int, list]]:
    if not pts or not _any_in(wanted, lo, hi):
        return
    if lo == hi:
        yield lo, pts
        return
    mid = (lo + hi) // 2
    cut = spec.ymax - (mid + 1) * spec.resolution
    yield from _split_rows(_clip_halfplane(pts, 1, cut, keep_less=False), spec, lo, mid, wanted)
    yield from _split_rows(_clip_halfplane(pts, 1, cut, keep_less=True), spec, mid + 1, hi, wanted)


def _split_cols(pts, spec, lo, hi, wanted) -> Iterator[tuple[int, list]]:
    if not pts or not _any_in(wanted, lo, hi):
        return
    if lo == hi:
        yield lo, pts
        return
    mid = (lo + hi) // 2
    cut = spec.xmin + (mid + 1) * spec.resolution
    yield from _split_cols(_clip_halfplane(pts, 0, cut, keep_less=True), spec, lo, mid, wanted)
    yield from _split_cols(_clip_halfplane(pts, 0, cut, keep_less=False), spec, mid + 1, hi, wanted)


def _boundary_areas(poly: Polygon, spec: GridSpec, win, boundary: np.ndarray) -> np.ndarray:
    """Exact polygon area inside each boundary cell of the window."""
    r0, r1, c0, c1 = win
    res = spec.resolution
    areas = np.zeros(boundary.shape, dtype=float)
    brows, bcols = np.nonzero(boundary)
    by_row: dict[int, list] = {}
    for r, c in zip((brows + r0).tolist(), (bcols + c0).tolist()):
        by_row.setdefault(r, []).append(c)
    wanted_rows = sorted(by_row)
    outer = (spec.xmin + c0 * res, spec.ymax - (r1 + 1) * res,
             spec.xmin + (c1 + 1) * res, spec.ymax - r0 * res)
    for sign, ring in [(1.0, poly.exterior)] + [(-1.0, h) for h in poly.holes]:
        pts = clip_ring_to_rect([tuple(p) for p in ring[:-1].tolist()], *outer)
        for r, band in _split_rows(pts, spec, r0, r1, wanted_rows):
            cols = sorted(by_row[r])
            for c, piece in _split_cols(band, spec, c0, c1, cols):
                areas[r - r0, c - c0] += sign * open_ring_area(piece)
    return areas


def _polygon_window_masks(poly: Polygon, spec: GridSpec):
    win = _window(spec, poly.bbox)
    if win is None:
        return None
    r0, r1, c0, c1 = win
    boundary = np.zeros((r1 - r0 + 1, c1 - c0 + 1), dtype=bool)
    for ring in poly.rings:
        _mark_path(boundary, spec, ring, r0, c0)
    inside = _center_parity(poly, spec, win) & ~boundary
    return win, boundary, inside


def polygon_coverage(mp: MultiPolygon, spec: GridSpec) -> np.ndarray:
    """Fraction of every cell covered by ``mp``, summed over members."""
    cover = np.zeros(spec.shape, dtype=float)
    cell_area = spec.resolution * spec.resolution
    for poly in _members(mp):
        masks = _polygon_window_masks(poly, spec)
        if masks is None:
            continue
        (r0, r1, c0, c1), boundary, inside = masks
        view = cover[r0:r1 + 1, c0:c1 + 1]
        view += inside
        if boundary.any():
            view += _boundary_areas(poly, spec, (r0, r1, c0, c1), boundary) / cell_area
    return cover


def _polygon_centers_mask(mp: MultiPolygon, spec: GridSpec) -> np.ndarray:
    mask = np.zeros(spec.shape, dtype=bool)
    for poly in _members(mp):
        masks = _polygon_window_masks(poly, spec)
        if masks is None:
            continue
        (r0, r1, c0, c1), boundary, inside = masks
        view = mask[r0:r1 + 1, c0:c1 + 1]
        view |= inside
        for r, c in zip(*np.nonzero(boundary)):
            if not view[r, c] and point_in_polygon(cell_center(spec, (r + r0, c + c0)), poly):
                view[r, c] = True
    return mask


def _members(mp) -> tuple[Polygon, ...]:
    if isinstance(mp, Polygon):
        return (mp,)
    return mp.polygons


def _polygons_mask(mp, spec: GridSpec, rule: CoverageRule) -> np.ndarray:
    if rule.mode == CENTER:
        return _polygon_centers_mask(mp, spec)
    return polygon_coverage(mp, spec) > rule.threshold


def rasterize_polygons(mp: MultiPolygon, value: int, spec: GridSpec,
                       rule: CoverageRule = DEFAULT_RULE) -> Raster:
    _check_value(value)
    return _as_raster(spec, _polygons_mask(mp, spec, rule), value)


# --- mixed datasets ----------------------------------------------------------

def _geometry_mask(g, spec: GridSpec, rule: CoverageRule) -> np.ndarray:
    if isinstance(g, (MultiPolygon, Polygon)):
        return _polygons_mask(g, spec, rule)
    if isinstance(g, Polyline):
        return _polyline_mask(g, spec)
    if isinstance(g, Point2D):
        return _points_mask([g], spec)
    raise TypeError(f"cannot rasterize {type(g).__name__}")


def rasterize_dataset(geoms: Iterable, value: int, spec: GridSpec,
                      rule: CoverageRule = DEFAULT_RULE) -> Raster:
    """Cellwise OR of the rasterization of every geometry.

    Bare points are batched into one pass.
    """
    _check_value(value)
    mask = np.zeros(spec.shape, dtype=bool)
    points = []
    for g in geoms:
        if isinstance(g, Point2D):
            points.append(g)
        else:
            mask |= _geometry_mask(g, spec, rule)
    if points:
        mask |= _points_mask(points, spec)
    return _as_raster(spec, mask, value)
