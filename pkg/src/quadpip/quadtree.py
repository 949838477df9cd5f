"""Value-based region quadtree over a raster.

The raster is padded with nodata to a ``side x side`` square, ``side`` a
power of two, and split recursively into NW, NE, SW, SE quadrants until a
quadrant is uniform; each uniform quadrant is a single leaf.

Nodes are stored in level order in two parallel arrays. ``first_child[i]``
is the index of the NW child of node ``i`` (its four children are
contiguous) or ``-1`` for a leaf; ``values[i]`` holds a leaf's value. The
layout is a pure function of the tree shape, so two canonical trees are
structurally equal exactly when their arrays are equal. Nodes carry no
extents; block positions are recomputed while descending.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Union

import numpy as np

from .grid import NODATA, GridSpec, Raster, cell_of_point, cells_of_points, require_aligned

NW, NE, SW, SE = range(4)

Combine = Callable[[int, int], int]


def padded_side(ncols: int, nrows: int) -> int:
    n = max(ncols, nrows)
    return 1 << (n - 1).bit_length()


@dataclass(frozen=True, eq=False)
class QuadNode:
    """Read-only view of one node; ``children`` is empty for a leaf."""

    tree: "Quadtree"
    index: int

    @property
    def is_leaf(self) -> bool:
        return self.tree.first_child[self.index] < 0

    @property
    def value(self) -> Optional[int]:
        return int(self.tree.values[self.index]) if self.is_leaf else None

    @property
    def children(self) -> tuple["QuadNode", ...]:
        fc = int(self.tree.first_child[self.index])
        if fc < 0:
            return ()
        return tuple(QuadNode(self.tree, fc + q) for q in range(4))

    def __repr__(self):
        if self.is_leaf:
            return f"Leaf({self.value})"
        return f"Internal(#{self.index})"


class Quadtree:
    __slots__ = ("spec", "side", "nodata", "first_child", "values", "_fc", "_vals")

    def __init__(self, spec: GridSpec, side: int, first_child, values, nodata: int = NODATA):
        if side < 1 or side & (side - 1):
            raise ValueError(f"side must be a power of two, got {side}")
        if side < max(spec.ncols, spec.nrows):
            raise ValueError(f"side {side} smaller than grid {spec.nrows}x{spec.ncols}")
        fc = np.ascontiguousarray(first_child, dtype=np.int64)
        vals = np.ascontiguousarray(values, dtype=np.int32)
        if fc.shape != vals.shape or fc.ndim != 1 or fc.size == 0:
            raise ValueError("node arrays must be nonempty 1-d arrays of equal length")
        fc.setflags(write=False)
        vals.setflags(write=False)
        self.spec = spec
        self.side = side
        self.nodata = int(nodata)
        self.first_child = fc
        self.values = vals
        self._fc = None
        self._vals = None

    @property
    def root(self) -> QuadNode:
        return QuadNode(self, 0)

    @property
    def levels(self) -> int:
        return self.side.bit_length() - 1

    def structurally_equal(self, other: "Quadtree") -> bool:
        return (self.side == other.side and self.nodata == other.nodata
                and np.array_equal(self.first_child, other.first_child)
                and np.array_equal(self.values, other.values))

    def __eq__(self, other):
        if not isinstance(other, Quadtree):
            return NotImplemented
        from .grid import specs_aligned
        return specs_aligned(self.spec, other.spec) and self.structurally_equal(other)

    def __repr__(self):
        return (f"Quadtree(side={self.side}, nodes={node_count(self)}, "
                f"leaves={leaf_count(self)}, spec={self.spec!r})")

    def _lists(self):
        # plain lists index several times faster than numpy scalars
        if self._fc is None:
            self._fc = self.first_child.tolist()
            self._vals = self.values.tolist()
        return self._fc, self._vals


# --- construction ------------------------------------------------------------

def _pad(r: Raster, side: int) -> np.ndarray:
    grid = np.full((side, side), r.nodata, dtype=np.int32)
    grid[:r.spec.nrows, :r.spec.ncols] = r.values
    return grid


def _pyramid(grid: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per level ``(uniform, value)`` arrays; level 0 is the cell grid."""
    uniform = np.ones(grid.shape, dtype=bool)
    value = grid
    levels = [(uniform, value)]
    while value.shape[0] > 1:
        u = uniform[0::2, 0::2] & uniform[0::2, 1::2] & uniform[1::2, 0::2] & uniform[1::2, 1::2]
        v = value[0::2, 0::2]
        u &= (v == value[0::2, 1::2]) & (v == value[1::2, 0::2]) & (v == value[1::2, 1::2])
        uniform, value = u, v
        levels.append((uniform, value))
    return levels


def build_from_raster(r: Raster) -> Quadtree:
    side = padded_side(r.spec.ncols, r.spec.nrows)
    levels = _pyramid(_pad(r, side))
    first_child, values = [], []
    rows = np.zeros(1, dtype=np.intp)
    cols = np.zeros(1, dtype=np.intp)
    offset = 0
    for level in range(len(levels) - 1, -1, -1):
        uniform, value = levels[level]
        leaf = uniform[rows, cols]
        n = rows.size
        fc = np.full(n, -1, dtype=np.int64)
        internal = np.flatnonzero(~leaf)
        fc[internal] = offset + n + 4 * np.arange(internal.size)
        vals = np.where(leaf, value[rows, cols], 0).astype(np.int32)
        first_child.append(fc)
        values.append(vals)
        offset += n
        if internal.size == 0:
            break
        pr, pc = 2 * rows[internal], 2 * cols[internal]
        rows = np.stack([pr, pr, pr + 1, pr + 1], axis=1).ravel()
        cols = np.stack([pc, pc + 1, pc, pc + 1], axis=1).ravel()
    return Quadtree(r.spec, side, np.concatenate(first_child), np.concatenate(values), r.nodata)


def _level_slices(qt: Quadtree) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray, int]]:
    """Walk the level-order layout yielding ``(node_idx, rows, cols, size)``
    per depth, where ``rows/cols`` are block coordinates at that depth."""
    idx = np.zeros(1, dtype=np.int64)
    rows = np.zeros(1, dtype=np.intp)
    cols = np.zeros(1, dtype=np.intp)
    size = qt.side
    while idx.size:
        yield idx, rows, cols, size
        fc = qt.first_child[idx]
        internal = fc >= 0
        if not internal.any():
            return
        base = fc[internal]
        pr, pc = 2 * rows[internal], 2 * cols[internal]
        idx = (base[:, None] + np.arange(4)).ravel()
        rows = np.stack([pr, pr, pr + 1, pr + 1], axis=1).ravel()
        cols = np.stack([pc, pc + 1, pc, pc + 1], axis=1).ravel()
        size //= 2


def to_padded_grid(qt: Quadtree) -> np.ndarray:
    """Paint leaves onto the full padded square, coarse levels first."""
    grid = np.zeros((1, 1), dtype=np.int32)
    for idx, rows, cols, size in _level_slices(qt):
        n_blocks = qt.side // size
        if grid.shape[0] != n_blocks:
            factor = n_blocks // grid.shape[0]
            grid = np.repeat(np.repeat(grid, factor, axis=0), factor, axis=1)
        leaf = qt.first_child[idx] < 0
        grid[rows[leaf], cols[leaf]] = qt.values[idx[leaf]]
    if grid.shape[0] != qt.side:
        factor = qt.side // grid.shape[0]
        grid = np.repeat(np.repeat(grid, factor, axis=0), factor, axis=1)
    return grid


def to_raster(qt: Quadtree) -> Raster:
    grid = to_padded_grid(qt)
    return Raster(qt.spec, grid[:qt.spec.nrows, :qt.spec.ncols], qt.nodata)


# --- queries -----------------------------------------------------------------

class VisitCounter:
    """Accumulates node visits across :func:`query_point` calls."""

    __slots__ = ("visits", "last")

    def __init__(self):
        self.visits = 0
        self.last = 0


def query_cell(qt: Quadtree, row: int, col: int, counter: Optional[VisitCounter] = None) -> int:
    fc, vals = qt._lists()
    node = 0
    shift = qt.levels - 1
    visits = 1
    child = fc[0]
    while child >= 0:
        node = child + (((row >> shift) & 1) << 1) + ((col >> shift) & 1)
        shift -= 1
        visits += 1
        child = fc[node]
    if counter is not None:
        counter.visits += visits
        counter.last = visits
    return vals[node]


def query_point(qt: Quadtree, p, counter: Optional[VisitCounter] = None) -> Optional[int]:
    """Leaf value covering ``p``; ``None`` outside the extent or on nodata."""
    c = cell_of_point(qt.spec, p)
    if c is None:
        return None
    v = query_cell(qt, c.row, c.col, counter)
    return None if v == qt.nodata else v


def query_cells(qt: Quadtree, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Vectorised descent for many cells at once.

    The quadrant taken at each level is read off the row/col bits up front;
    points that reached a leaf simply stay put.
    """
    node = np.zeros(np.shape(rows), dtype=np.int64)
    if qt.levels == 0:
        return qt.values[node]
    shifts = np.arange(qt.levels - 1, -1, -1)[:, None]
    codes = (((rows[None] >> shifts) & 1) << 1) | ((cols[None] >> shifts) & 1)
    fc = qt.first_child
    for level_codes in codes:
        child = fc[node]
        leaf = child < 0
        if leaf.all():
            break
        node = np.where(leaf, node, child + level_codes)
    return qt.values[node]


def query_points(qt: Quadtree, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batch form of :func:`query_point`: ``(values, present)``."""
    rows, cols, valid = cells_of_points(qt.spec, xy)
    vals = query_cells(qt, rows, cols)
    present = valid & (vals != qt.nodata)
    return np.where(present, vals, qt.nodata), present


# --- metrics -----------------------------------------------------------------

def node_count(qt: Quadtree) -> int:
    return int(qt.first_child.size)


def leaf_count(qt: Quadtree) -> int:
    return int(np.count_nonzero(qt.first_child < 0))


def depth(qt: Quadtree) -> int:
    d = -1
    for d, _ in enumerate(_level_slices(qt)):
        pass
    return d


def is_canonical(qt: Quadtree) -> bool:
    """No internal node has four leaf children of equal value."""
    fc = qt.first_child
    internal = np.flatnonzero(fc >= 0)
    if internal.size == 0:
        return True
    kids = fc[internal][:, None] + np.arange(4)
    all_leaves = (fc[kids] < 0).all(axis=1)
    v = qt.values[kids]
    same = (v == v[:, :1]).all(axis=1)
    return not bool(np.any(all_leaves & same))


# --- intersection ------------------------------------------------------------

# Nested form used while combining: an int is a leaf, a 4-tuple an internal node.
Nested = Union[int, tuple]


def and_presence(nodata: int = NODATA) -> Combine:
    """1 where both operands hold a feature, else 0."""
    def combine(a: int, b: int) -> int:
        return 1 if (a != 0 and b != 0 and a != nodata and b != nodata) else 0
    return combine


def mask_by(nodata: int = NODATA) -> Combine:
    """Keep the first operand's value where the second holds a feature."""
    def combine(a: int, b: int) -> int:
        return a if (b != 0 and b != nodata) else 0
    return combine


COMBINERS = {"and": and_presence, "mask": mask_by}


def _nodata_guard(combine: Combine, nodata: int) -> Combine:
    def guarded(a: int, b: int) -> int:
        if a == nodata or b == nodata:
            return nodata
        return combine(a, b)
    return guarded


def _flatten(nested: Nested) -> tuple[np.ndarray, np.ndarray]:
    first_child, values = [], []
    level = [nested]
    offset = 0
    while level:
        nxt = []
        n = len(level)
        for node in level:
            if isinstance(node, tuple):
                first_child.append(offset + n + len(nxt))
                values.append(0)
                nxt.extend(node)
            else:
                first_child.append(-1)
                values.append(node)
        offset += n
        level = nxt
    return np.array(first_child, dtype=np.int64), np.array(values, dtype=np.int32)


def from_nested(spec: GridSpec, side: int, nested: Nested, nodata: int = NODATA) -> Quadtree:
    """Tree from nested form: an int is a leaf, a 4-tuple (NW, NE, SW, SE)
    an internal node."""
    first_child, values = _flatten(nested)
    return Quadtree(spec, side, first_child, values, nodata)


def intersect_quadtrees(a: Quadtree, b: Quadtree, combine: Combine | str = "and") -> Quadtree:
    """Overlay two aligned trees by simultaneous descent.

    Where one side is a leaf and the other internal, the leaf is treated as a
    uniform subtree. Nodata on either side always yields nodata, so padding
    stays padding. Results are merged back to canonical form on the way up.
    """
    require_aligned(a.spec, b.spec)
    if a.side != b.side:
        raise ValueError(f"trees have different padded sides {a.side} and {b.side}")
    if isinstance(combine, str):
        combine = COMBINERS[combine](a.nodata)
    if b.nodata != a.nodata:
        fb_vals = [a.nodata if v == b.nodata else v for v in b._lists()[1]]
    else:
        fb_vals = b._lists()[1]
    fn = _nodata_guard(combine, a.nodata)
    fa, va_list = a._lists()
    fb = b._lists()[0]
    nested = _combine_nodes(fa, va_list, 0, None, fb, fb_vals, 0, None, fn)
    return from_nested(a.spec, a.side, nested, a.nodata)


def _combine_nodes(fa, vals_a, ia, leaf_a, fb, vals_b, ib, leaf_b, fn) -> Nested:
    """Recursive overlay. ``leaf_a`` set means side a is a uniform block
    of that value (a virtual subtree); otherwise ``ia`` is a node index."""
    if leaf_a is None and fa[ia] < 0:
        leaf_a = vals_a[ia]
    if leaf_b is None and fb[ib] < 0:
        leaf_b = vals_b[ib]
    if leaf_a is not None and leaf_b is not None:
        return fn(leaf_a, leaf_b)
    ca = None if leaf_a is not None else fa[ia]
    cb = None if leaf_b is not None else fb[ib]
    kids = [
        _combine_nodes(fa, vals_a, None if ca is None else ca + q, leaf_a,
                       fb, vals_b, None if cb is None else cb + q, leaf_b, fn)
        for q in range(4)
    ]
    first = kids[0]
    if not isinstance(first, tuple) and all(not isinstance(k, tuple) and k == first for k in kids):
        return first
    return tuple(kids)


def combine_rasters(a: Raster, b: Raster, combine: Combine | str = "and") -> Raster:
    """Cellwise combination of two aligned rasters, with the same nodata
    propagation as :func:`intersect_quadtrees`."""
    require_aligned(a.spec, b.spec)
    if isinstance(combine, str):
        combine = COMBINERS[combine](a.nodata)
    fn = np.frompyfunc(_nodata_guard(combine, a.nodata), 2, 1)
    bv = np.where(b.values == b.nodata, a.nodata, b.values)
    return Raster(a.spec, fn(a.values, bv).astype(np.int32), a.nodata)
