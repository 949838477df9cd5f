import json

import numpy as np
import pytest

from quadpip.formats import (
    FormatError,
    dumps_quadtree,
    format_number,
    loads_quadtree,
    parse_geojson,
    read_ascii_grid,
    read_geojson,
    read_quadtree,
    write_ascii_grid,
    write_geojson,
    write_quadtree,
)
from quadpip.geometry import MultiPolygon, Point2D, Polyline
from quadpip.grid import NODATA, GridSpec, Raster
from quadpip.quadtree import build_from_raster
from quadpip.synthetic import park_suite, trajectories

UNIT = [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]


def fc(*geoms, values=None):
    feats = []
    for i, g in enumerate(geoms):
        props = {} if values is None else {"value": values[i]}
        feats.append({"type": "Feature", "properties": props, "geometry": g})
    return {"type": "FeatureCollection", "features": feats}


def test_format_number():
    assert [format_number(v) for v in (3.0, -0.0, 2.5, 0.1)] == ["3", "0", "2.5", "0.1"]


def test_unit_square_polygon(tmp_path):
    path = tmp_path / "sq.geojson"
    path.write_text(json.dumps(fc({"type": "Polygon", "coordinates": [UNIT]})))
    ds = read_geojson(path)
    assert ds.name == "sq" and ds.value == 1
    assert len(ds.geoms) == 1
    assert isinstance(ds.geoms[0], MultiPolygon) and len(ds.geoms[0]) == 1


def test_mixed_features_and_value():
    doc = fc({"type": "LineString", "coordinates": [[0, 0], [2, 3]]},
             {"type": "Polygon", "coordinates": [UNIT]},
             {"type": "Point", "coordinates": [0.5, 0.5]},
             {"type": "MultiPolygon", "coordinates": [[UNIT], [[[5, 5], [6, 5], [6, 6], [5, 5]]]]},
             values=[3, 3, 3, 3])
    ds = parse_geojson(doc)
    assert ds.value == 3
    kinds = [type(g) for g in ds.geoms]
    assert kinds == [Polyline, MultiPolygon, Point2D, MultiPolygon]
    assert len(ds.geoms[3]) == 2


@pytest.mark.parametrize("doc, message", [
    ({"type": "Feature"}, "FeatureCollection"),
    (fc(), "empty"),
    (fc({"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [1, 1], [0, 1]]]}), "feature 0: ring is not closed"),
    (fc({"type": "Point", "coordinates": [0, 0]},
        {"type": "GeometryCollection", "coordinates": []}), "feature 1: unsupported geometry type"),
    (fc({"type": "Point", "coordinates": [0, 0]}, values=["a"]), "integer"),
    (fc({"type": "Point", "coordinates": [0, 0]}, {"type": "Point", "coordinates": [1, 0]},
        values=[1, 2]), "single category"),
    (fc({"type": "LineString", "coordinates": [[0, 0]]}), "feature 0"),
])
def test_geojson_errors(doc, message):
    with pytest.raises(FormatError, match=message):
        parse_geojson(doc)


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.geojson"
    path.write_text('{"type": "FeatureCollection", "features": [')
    with pytest.raises(FormatError, match="malformed JSON"):
        read_geojson(path)


def test_trajectory_corpus_round_trip(tmp_path):
    lines = trajectories(4000, vertices=20, seed=3)
    path = tmp_path / "trips.geojson"
    write_geojson(lines, path)
    back = read_geojson(path)
    assert len(back.geoms) == 4000
    for a, b in zip(lines, back.geoms):
        np.testing.assert_allclose(b.vertices, a.vertices, rtol=0, atol=1e-9)


def test_polygon_round_trip_with_holes(tmp_path):
    parks = park_suite(5, pond_fraction=1.0, seed=2)
    path = tmp_path / "parks.geojson"
    write_geojson(parks, path)
    back = read_geojson(path).geoms
    for a, b in zip(parks, back):
        for ra, rb in zip(a.polygons[0].rings, b.polygons[0].rings):
            np.testing.assert_allclose(rb, ra, rtol=0, atol=1e-9)


def _raster(values, **kw):
    values = np.asarray(values)
    spec = GridSpec(kw.get("xmin", 0.0), kw.get("ymax", 2.0), kw.get("res", 1.0),
                    values.shape[1], values.shape[0])
    return Raster(spec, values)


def test_ascii_grid_layout(tmp_path):
    path = tmp_path / "g.asc"
    write_ascii_grid(_raster([[1, 0], [NODATA, 2]]), path)
    lines = path.read_text().splitlines()
    assert len(lines) == 8
    assert lines[:6] == ["ncols 2", "nrows 2", "xllcorner 0", "yllcorner 0", "cellsize 1",
                         "NODATA_value -9999"]
    assert lines[6:] == ["1 0", "-9999 2"]
    assert b"\r" not in path.read_bytes()


def test_ascii_grid_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    for i in range(25):
        nrows, ncols = (int(v) for v in rng.integers(1, 40, 2))
        values = rng.choice([0, 1, 2, NODATA], (nrows, ncols))
        spec = GridSpec(float(rng.uniform(-1e5, 1e5)), float(rng.uniform(-1e5, 1e5)),
                        float(rng.choice([0.5, 1.0, 2.5, 0.1, 10.0])), ncols, nrows)
        r = Raster(spec, values)
        path = tmp_path / f"r{i}.asc"
        write_ascii_grid(r, path)
        back = read_ascii_grid(path)
        assert back == r


def test_ascii_grid_count_mismatch(tmp_path):
    path = tmp_path / "g.asc"
    path.write_text("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 0\n1\n")
    with pytest.raises(FormatError, match="declares 2x2=4 cells but data holds 3"):
        read_ascii_grid(path)


def test_ascii_grid_header_errors(tmp_path):
    path = tmp_path / "g.asc"
    path.write_text("ncols 1\nnrows 1\nxllcenter 0\nyllcenter 0\ncellsize 1\nNODATA_value -9999\n1\n")
    with pytest.raises(FormatError, match="center-registered"):
        read_ascii_grid(path)
    path.write_text("ncols 1\nnrows 1\nxllcorner 0\n1\n")
    with pytest.raises(FormatError):
        read_ascii_grid(path)


def test_quadtree_single_leaf_stream():
    qt = build_from_raster(_raster([[1, 1], [1, 1]]))
    assert dumps_quadtree(qt) == "QT1 0 2 1 2 2 2\nL 1\n"


def test_quadtree_checkerboard_byte_exact(tmp_path):
    checker = np.indices((4, 4)).sum(axis=0) % 2
    qt = build_from_raster(_raster(checker, ymax=4.0))
    path = tmp_path / "c.qt"
    write_quadtree(qt, path)
    data = path.read_bytes()
    back = read_quadtree(path)
    assert back.structurally_equal(qt)
    assert dumps_quadtree(back).encode() == data
    assert data.count(b"I\n") == 5 and data.count(b"L ") == 16


def test_quadtree_stream_nodata_and_random_round_trips():
    rng = np.random.default_rng(4)
    for _ in range(50):
        nrows, ncols = (int(v) for v in rng.integers(1, 33, 2))
        values = rng.choice([0, 1, 2, NODATA], (nrows, ncols), p=[0.5, 0.3, 0.1, 0.1])
        qt = build_from_raster(Raster(GridSpec(-3.5, 12.25, 0.25, ncols, nrows), values))
        text = dumps_quadtree(qt)
        assert dumps_quadtree(loads_quadtree(text)) == text
    assert "L *" in dumps_quadtree(build_from_raster(_raster(np.full((3, 3), 1), ymax=3.0)))


@pytest.mark.parametrize("text, message", [
    ("QT1 0 2 1 2 2 2\nI\nL 1\nL 2\n", "ends inside"),
    ("QT1 0 2 1 2 2 2\n", "ends inside"),
    ("QT1 0 2 1 2 2 2\nL 1\nL 1\n", "trailing"),
    ("QT1 0 2 1 2 2 2\nI\nL 1\nL 1\nL 1\nL 1\n", "four equal"),
    ("QT1 0 2 1 2 2 2\nI\nI\n", "below cell level"),
    ("QT1 0 2 1 2 2 2\nL x\n", "bad leaf value"),
    ("QT1 0 2 1 2 2 2\nL -9999\n", "spelled"),
    ("QT1 0 2 1 2 2 3\nL 1\n", "power of two"),
    ("QT2 0 2 1 2 2 2\nL 1\n", "header"),
    ("", "empty"),
])
def test_quadtree_stream_errors(text, message):
    with pytest.raises(FormatError, match=message):
        loads_quadtree(text)
