"""The shared raster structure: grid specs, cell addressing and rasters."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .geometry import BoundingBox

NODATA = -9999
# Coordinate tolerance used when comparing grid origins and resolutions.
ALIGN_TOL = 1e-9


class AlignmentError(ValueError):
    """Two grids that must share a structure do not."""


class CellIndex(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class GridSpec:
    """Square-celled grid anchored at its top-left corner."""

    xmin: float
    ymax: float
    resolution: float
    ncols: int
    nrows: int
    crs_id: str = ""

    def __post_init__(self):
        for name, kind in (("xmin", float), ("ymax", float), ("resolution", float),
                           ("ncols", int), ("nrows", int), ("crs_id", str)):
            object.__setattr__(self, name, kind(getattr(self, name)))
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if self.ncols < 1 or self.nrows < 1:
            raise ValueError(f"grid must have at least one cell, got {self.ncols}x{self.nrows}")

    @classmethod
    def from_extent(cls, bbox: BoundingBox, resolution: float, crs_id: str = "") -> "GridSpec":
        """Smallest grid with the given cell size covering ``bbox`` from its top-left."""
        ncols = max(1, math.ceil(bbox.width / resolution - 1e-9))
        nrows = max(1, math.ceil(bbox.height / resolution - 1e-9))
        return cls(bbox.xmin, bbox.ymax, float(resolution), ncols, nrows, crs_id)

    @property
    def xmax(self) -> float:
        return self.xmin + self.ncols * self.resolution

    @property
    def ymin(self) -> float:
        return self.ymax - self.nrows * self.resolution

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    @property
    def cell_count(self) -> int:
        return self.nrows * self.ncols

    @property
    def bbox(self) -> BoundingBox:
        return BoundingBox(self.xmin, self.ymin, self.xmax, self.ymax)


def cell_of_point(spec: GridSpec, p) -> Optional[CellIndex]:
    """Cell containing ``p``; ``None`` outside the half-open extent."""
    col = math.floor((p[0] - spec.xmin) / spec.resolution)
    row = math.floor((spec.ymax - p[1]) / spec.resolution)
    if 0 <= col < spec.ncols and 0 <= row < spec.nrows:
        return CellIndex(row, col)
    return None


def cells_of_points(spec: GridSpec, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised :func:`cell_of_point`: ``(rows, cols, valid)``.

    Invalid entries have row and col set to 0 so they can still be used as
    indices; callers must mask with ``valid``.
    """
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    cols = np.floor((xy[:, 0] - spec.xmin) / spec.resolution)
    rows = np.floor((spec.ymax - xy[:, 1]) / spec.resolution)
    valid = (cols >= 0) & (cols < spec.ncols) & (rows >= 0) & (rows < spec.nrows)
    rows = np.where(valid, rows, 0).astype(np.intp)
    cols = np.where(valid, cols, 0).astype(np.intp)
    return rows, cols, valid


def cell_bounds(spec: GridSpec, c) -> BoundingBox:
    row, col = c
    if not (0 <= row < spec.nrows and 0 <= col < spec.ncols):
        raise IndexError(f"cell {tuple(c)} outside {spec.nrows}x{spec.ncols} grid")
    res = spec.resolution
    return BoundingBox(spec.xmin + col * res, spec.ymax - (row + 1) * res,
                       spec.xmin + (col + 1) * res, spec.ymax - row * res)


def cell_center(spec: GridSpec, c) -> tuple[float, float]:
    row, col = c
    res = spec.resolution
    return spec.xmin + (col + 0.5) * res, spec.ymax - (row + 0.5) * res


def cell_centers(spec: GridSpec) -> np.ndarray:
    """Centers of all cells in row-major order as an ``(nrows*ncols, 2)`` array."""
    res = spec.resolution
    xs = spec.xmin + (np.arange(spec.ncols) + 0.5) * res
    ys = spec.ymax - (np.arange(spec.nrows) + 0.5) * res
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def specs_aligned(a: GridSpec, b: GridSpec) -> bool:
    return (a.ncols == b.ncols and a.nrows == b.nrows and a.crs_id == b.crs_id
            and abs(a.xmin - b.xmin) <= ALIGN_TOL and abs(a.ymax - b.ymax) <= ALIGN_TOL
            and abs(a.resolution - b.resolution) <= ALIGN_TOL)


def require_aligned(a: GridSpec, b: GridSpec) -> None:
    if not specs_aligned(a, b):
        raise AlignmentError(f"grids are not aligned: {a} vs {b}")


class Raster:
    """Integer-coded cell values over a :class:`GridSpec`.

    ``values`` is a C-ordered ``(nrows, ncols)`` array, i.e. the row-major
    cell sequence reshaped. ``0`` means no feature, positive codes are
    categories, ``nodata`` marks cells outside data coverage.
    """

    __slots__ = ("spec", "values", "nodata")

    def __init__(self, spec: GridSpec, values, nodata: int = NODATA):
        arr = np.ascontiguousarray(values, dtype=np.int32)
        if arr.ndim == 1:
            if arr.size != spec.cell_count:
                raise ValueError(f"expected {spec.cell_count} values, got {arr.size}")
            arr = arr.reshape(spec.shape)
        if arr.shape != spec.shape:
            raise ValueError(f"values shape {arr.shape} does not match grid {spec.shape}")
        arr.setflags(write=False)
        self.spec = spec
        self.values = arr
        self.nodata = int(nodata)

    @classmethod
    def filled(cls, spec: GridSpec, value: int = 0, nodata: int = NODATA) -> "Raster":
        return cls(spec, np.full(spec.shape, value, dtype=np.int32), nodata)

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return (specs_aligned(self.spec, other.spec) and self.nodata == other.nodata
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"Raster({self.spec!r}, nodata={self.nodata})"

    def presence(self) -> np.ndarray:
        """Boolean mask of cells holding a feature (nonzero, not nodata)."""
        return (self.values != 0) & (self.values != self.nodata)


def value_at_point(r: Raster, p) -> Optional[int]:
    c = cell_of_point(r.spec, p)
    if c is None:
        return None
    v = int(r.values[c.row, c.col])
    return None if v == r.nodata else v


def values_at_points(r: Raster, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised lookup: ``(values, present)`` where ``present`` is False
    for out-of-extent or nodata points."""
    rows, cols, valid = cells_of_points(r.spec, xy)
    vals = r.values[rows, cols]
    present = valid & (vals != r.nodata)
    return np.where(present, vals, r.nodata), present
