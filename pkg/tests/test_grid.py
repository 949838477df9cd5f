import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadpip.geometry import BoundingBox
from quadpip.grid import (
    NODATA,
    CellIndex,
    GridSpec,
    Raster,
    cell_bounds,
    cell_center,
    cell_of_point,
    cells_of_points,
    specs_aligned,
    value_at_point,
    values_at_points,
)

SPEC = GridSpec(xmin=0, ymax=10, resolution=5, ncols=2, nrows=2)


def test_spec_invariants():
    with pytest.raises(ValueError):
        GridSpec(0, 0, 0, 1, 1)
    with pytest.raises(ValueError):
        GridSpec(0, 0, 1, 0, 1)
    assert SPEC.xmax == 10 and SPEC.ymin == 0


def test_from_extent_covers():
    spec = GridSpec.from_extent(BoundingBox(0, 0, 100, 45), 10)
    assert (spec.ncols, spec.nrows) == (10, 5)
    assert spec.ymax == 45 and spec.ymin == -5


@pytest.mark.parametrize("p, expected", [
    ((2, 8), CellIndex(0, 0)),
    ((5, 5), CellIndex(1, 1)),
    ((10, 0), None),
    ((0, 10), CellIndex(0, 0)),
    ((9.999, 0.001), CellIndex(1, 1)),
    ((-0.001, 5), None),
    ((5, 0), None),
])
def test_cell_of_point(p, expected):
    assert cell_of_point(SPEC, p) == expected


def test_cell_bounds():
    assert cell_bounds(SPEC, (0, 0)) == BoundingBox(0, 5, 5, 10)
    assert cell_bounds(SPEC, (1, 1)) == BoundingBox(5, 0, 10, 5)
    with pytest.raises(IndexError):
        cell_bounds(SPEC, (2, 0))


@pytest.mark.parametrize("n", [1, 7, 64, 256])
def test_center_round_trip_exhaustive(n):
    spec = GridSpec(-123.25, 987.5, 0.75, n, n)
    for row in range(n):
        for col in range(n):
            b = cell_bounds(spec, (row, col))
            center = ((b.xmin + b.xmax) / 2, (b.ymin + b.ymax) / 2)
            assert cell_of_point(spec, center) == (row, col)


def test_vectorised_cells_total_over_extent():
    spec = GridSpec(3.0, 50.0, 0.37, 97, 61)
    rng = np.random.default_rng(0)
    x = rng.uniform(spec.xmin, spec.xmax, 1_000_000)
    y = rng.uniform(spec.ymin, spec.ymax, 1_000_000)
    keep = (x < spec.xmax) & (y > spec.ymin)
    rows, cols, valid = cells_of_points(spec, np.column_stack([x[keep], y[keep]]))
    assert valid.all()
    assert rows.min() >= 0 and rows.max() < spec.nrows
    assert cols.min() >= 0 and cols.max() < spec.ncols


def test_vectorised_cells_match_scalar():
    spec = GridSpec(0, 10, 0.5, 20, 20)
    rng = np.random.default_rng(1)
    pts = rng.uniform(-2, 12, (3000, 2))
    rows, cols, valid = cells_of_points(spec, pts)
    for p, r, c, v in zip(pts.tolist(), rows, cols, valid):
        scalar = cell_of_point(spec, p)
        assert (scalar is not None) == v
        if v:
            assert scalar == (r, c)


def test_raster_shape_checked():
    with pytest.raises(ValueError):
        Raster(SPEC, [1, 2, 3])
    r = Raster(SPEC, [1, 2, 3, 4])
    assert r.values.tolist() == [[1, 2], [3, 4]]


def test_value_at_point_examples():
    uniform = Raster.filled(SPEC, 7)
    assert value_at_point(uniform, (3, 3)) == 7
    assert value_at_point(uniform, (11, 3)) is None
    with_nodata = Raster(SPEC, [1, NODATA, 0, 2])
    assert value_at_point(with_nodata, (7, 7)) is None
    assert value_at_point(with_nodata, (2, 2)) == 0


def test_value_at_point_against_index_arithmetic():
    rng = np.random.default_rng(8)
    spec = GridSpec(100.0, 200.0, 2.5, 33, 17)
    vals = rng.integers(0, 5, spec.shape)
    r = Raster(spec, vals)
    flat = vals.ravel().tolist()
    pts = rng.uniform([100, 157.5], [182.5, 200], (1000, 2))
    for x, y in pts.tolist():
        col = int((x - 100.0) // 2.5)
        row = int((200.0 - y) // 2.5)
        assert value_at_point(r, (x, y)) == flat[row * 33 + col]
    got, present = values_at_points(r, pts)
    assert present.all()
    assert got.tolist() == [value_at_point(r, p) for p in pts.tolist()]


@settings(max_examples=300, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_value_lookup_never_out_of_bounds(x, y):
    spec = GridSpec(-10, 10, 0.3, 67, 67)
    r = Raster.filled(spec, 3)
    v = value_at_point(r, (x, y))
    assert v in (None, 3)
    vals, present = values_at_points(r, np.array([[x, y]]))
    assert bool(present[0]) == (v is not None)


def test_specs_aligned():
    assert specs_aligned(SPEC, GridSpec(0, 10, 5, 2, 2))
    assert not specs_aligned(SPEC, GridSpec(0, 10, 10, 2, 2))
    assert specs_aligned(SPEC, GridSpec(1e-12, 10, 5, 2, 2))
    assert not specs_aligned(SPEC, GridSpec(0, 10, 5, 2, 2, crs_id="EPSG:25833"))
    assert not specs_aligned(SPEC, GridSpec(0, 10, 5, 3, 2))


def test_cell_center_helper():
    assert cell_center(SPEC, (1, 0)) == (2.5, 2.5)
