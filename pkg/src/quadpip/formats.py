"""On-disk formats: a GeoJSON subset, ESRI ASCII grids and quadtree streams."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .geometry import GeometryError, MultiPolygon, Point2D, Polygon, Polyline
from .grid import NODATA, GridSpec, Raster
from .quadtree import Quadtree, from_nested

QT_MAGIC = "QT1"


class FormatError(ValueError):
    """A file does not follow its expected layout."""


def format_number(v: float) -> str:
    """Integral floats print without a fraction; others use the shortest
    repr that round-trips exactly."""
    v = float(v)
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


@dataclass
class Dataset:
    name: str
    geoms: list = field(default_factory=list)
    value: int = 1

    def __post_init__(self):
        if not self.geoms:
            raise ValueError(f"dataset {self.name!r} has no geometries")

    def __repr__(self):
        return f"Dataset({self.name!r}, {len(self.geoms)} geometries, value={self.value})"

    @property
    def polygons(self) -> list[MultiPolygon]:
        return [g for g in self.geoms if isinstance(g, MultiPolygon)]

    @property
    def polylines(self) -> list[Polyline]:
        return [g for g in self.geoms if isinstance(g, Polyline)]

    @property
    def points(self) -> list[Point2D]:
        return [g for g in self.geoms if isinstance(g, Point2D)]


# --- GeoJSON -------------------------------------------------------------------

def _ring(coords, where: str):
    if not isinstance(coords, list) or len(coords) < 4:
        raise FormatError(f"{where}: a ring needs at least 4 positions")
    if coords[0] != coords[-1]:
        raise FormatError(f"{where}: ring is not closed (first position != last)")
    return [tuple(float(c) for c in pos[:2]) for pos in coords]


def _polygon(rings, where: str) -> Polygon:
    if not isinstance(rings, list) or not rings:
        raise FormatError(f"{where}: polygon needs at least an exterior ring")
    try:
        return Polygon(_ring(rings[0], where), [_ring(h, where) for h in rings[1:]])
    except GeometryError as exc:
        raise FormatError(f"{where}: {exc}") from None


def _geometry(geom: dict, where: str):
    if not isinstance(geom, dict) or "type" not in geom:
        raise FormatError(f"{where}: missing geometry object")
    kind = geom["type"]
    coords = geom.get("coordinates")
    if coords is None:
        raise FormatError(f"{where}: geometry has no coordinates")
    try:
        if kind == "Point":
            return Point2D(float(coords[0]), float(coords[1]))
        if kind == "LineString":
            return Polyline([tuple(float(c) for c in pos[:2]) for pos in coords])
        if kind == "Polygon":
            return MultiPolygon([_polygon(coords, where)])
        if kind == "MultiPolygon":
            return MultiPolygon([_polygon(p, f"{where} part {k}") for k, p in enumerate(coords)])
    except (GeometryError, TypeError, IndexError) as exc:
        raise FormatError(f"{where}: invalid {kind}: {exc}") from None
    raise FormatError(f"{where}: unsupported geometry type {kind!r}")


def parse_geojson(doc, name: str = "dataset") -> Dataset:
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise FormatError("document is not a GeoJSON FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise FormatError("FeatureCollection has no features array")
    geoms, values = [], set()
    for i, feat in enumerate(features):
        where = f"feature {i}"
        if not isinstance(feat, dict) or feat.get("type") != "Feature":
            raise FormatError(f"{where}: not a Feature object")
        geoms.append(_geometry(feat.get("geometry"), where))
        props = feat.get("properties") or {}
        value = props.get("value", 1)
        if not isinstance(value, int) or isinstance(value, bool):
            raise FormatError(f"{where}: property 'value' must be an integer")
        values.add(value)
    if not geoms:
        raise FormatError("FeatureCollection is empty")
    if len(values) > 1:
        raise FormatError(f"features carry several category values {sorted(values)}; "
                          "one dataset holds a single category")
    return Dataset(name, geoms, values.pop())


def read_geojson(path) -> Dataset:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON: {exc}") from None
    return parse_geojson(doc, name=path.stem)


def _ring_coords(ring: np.ndarray) -> list:
    return ring.tolist()


def _feature_geometry(g) -> dict:
    if isinstance(g, Point2D):
        return {"type": "Point", "coordinates": [g.x, g.y]}
    if isinstance(g, Polyline):
        return {"type": "LineString", "coordinates": g.vertices.tolist()}
    if isinstance(g, Polygon):
        return {"type": "Polygon", "coordinates": [_ring_coords(r) for r in g.rings]}
    if isinstance(g, MultiPolygon):
        if len(g) == 1:
            return _feature_geometry(g.polygons[0])
        return {"type": "MultiPolygon",
                "coordinates": [[_ring_coords(r) for r in p.rings] for p in g.polygons]}
    raise TypeError(f"cannot encode {type(g).__name__}")


def to_geojson(geoms: Iterable, value: int = 1) -> dict:
    return {
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature", "properties": {"value": value}, "geometry": _feature_geometry(g)}
            for g in geoms
        ],
    }


def write_geojson(data, path) -> None:
    """Write a :class:`Dataset` or a plain geometry list."""
    if isinstance(data, Dataset):
        doc = to_geojson(data.geoms, data.value)
    else:
        doc = to_geojson(data)
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def read_points_geojson(path) -> np.ndarray:
    """Point features of a FeatureCollection as an ``(n, 2)`` array."""
    ds = read_geojson(path)
    pts = [g for g in ds.geoms if isinstance(g, Point2D)]
    if len(pts) != len(ds.geoms):
        raise FormatError(f"{path}: query points file may only contain Point features")
    return np.array([(p.x, p.y) for p in pts], dtype=float)


# --- ESRI ASCII grid -------------------------------------------------------------

_ASC_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def write_ascii_grid(r: Raster, path) -> None:
    spec = r.spec
    lines = [
        f"ncols {spec.ncols}",
        f"nrows {spec.nrows}",
        f"xllcorner {format_number(spec.xmin)}",
        f"yllcorner {format_number(spec.ymin)}",
        f"cellsize {format_number(spec.resolution)}",
        f"NODATA_value {r.nodata}",
    ]
    lines.extend(" ".join(map(str, row)) for row in r.values.tolist())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_ascii_grid(path, crs_id: str = "") -> Raster:
    text = Path(path).read_text(encoding="utf-8").split("\n")
    header = {}
    pos = 0
    while pos < len(text) and len(header) < 6:
        line = text[pos].strip()
        pos += 1
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0][0].isdigit() or parts[0][0] == "-":
            raise FormatError(f"{path}: header line {pos} malformed: {line!r}")
        header[parts[0].lower()] = parts[1]
    if "xllcenter" in header or "yllcenter" in header:
        raise FormatError(f"{path}: center-registered grids are not supported")
    missing = [k for k in _ASC_KEYS if k not in header]
    if missing:
        raise FormatError(f"{path}: header lacks {', '.join(missing)}")
    try:
        ncols, nrows = int(header["ncols"]), int(header["nrows"])
        xll, yll = float(header["xllcorner"]), float(header["yllcorner"])
        cellsize = float(header["cellsize"])
        nodata = int(float(header["nodata_value"]))
    except ValueError as exc:
        raise FormatError(f"{path}: bad header value: {exc}") from None
    tokens = " ".join(text[pos:]).split()
    if len(tokens) != ncols * nrows:
        raise FormatError(f"{path}: header declares {ncols}x{nrows}={ncols * nrows} cells "
                          f"but data holds {len(tokens)}")
    try:
        values = np.array([int(t) for t in tokens], dtype=np.int64)
    except ValueError as exc:
        raise FormatError(f"{path}: non-integer cell value: {exc}") from None
    if np.any(np.abs(values) > np.iinfo(np.int32).max):
        raise FormatError(f"{path}: cell value out of 32-bit range")
    spec = GridSpec(xll, yll + nrows * cellsize, cellsize, ncols, nrows, crs_id)
    return Raster(spec, values.reshape(nrows, ncols), nodata)


# --- quadtree stream -------------------------------------------------------------

def _leaf_token(v: int, nodata: int) -> str:
    return "L *" if v == nodata else f"L {v}"


def dump_quadtree(qt: Quadtree, out: TextIO) -> None:
    spec = qt.spec
    out.write(f"{QT_MAGIC} {format_number(spec.xmin)} {format_number(spec.ymax)} "
              f"{format_number(spec.resolution)} {spec.ncols} {spec.nrows} {qt.side}\n")
    fc, vals = qt._lists()
    stack = [0]
    while stack:
        node = stack.pop()
        child = fc[node]
        if child < 0:
            out.write(_leaf_token(vals[node], qt.nodata) + "\n")
        else:
            out.write("I\n")
            stack.extend((child + 3, child + 2, child + 1, child))


def write_quadtree(qt: Quadtree, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        dump_quadtree(qt, fh)


def _parse_header(line: str) -> tuple[GridSpec, int]:
    parts = line.split()
    if len(parts) != 7 or parts[0] != QT_MAGIC:
        raise FormatError(f"bad quadtree header {line!r}")
    try:
        spec = GridSpec(float(parts[1]), float(parts[2]), float(parts[3]),
                        int(parts[4]), int(parts[5]))
        side = int(parts[6])
    except ValueError as exc:
        raise FormatError(f"bad quadtree header {line!r}: {exc}") from None
    if side < 1 or side & (side - 1) or side < max(spec.ncols, spec.nrows):
        raise FormatError(f"header side {side} is not a power of two covering the grid")
    return spec, side


def loads_quadtree(text: str, nodata: int = NODATA, crs_id: str = "") -> Quadtree:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("empty quadtree stream")
    spec, side = _parse_header(lines[0])
    if crs_id:
        spec = GridSpec(spec.xmin, spec.ymax, spec.resolution, spec.ncols, spec.nrows, crs_id)
    max_depth = side.bit_length() - 1
    tokens = iter(enumerate(lines[1:], start=2))

    def parse(level: int):
        try:
            lineno, tok = next(tokens)
        except StopIteration:
            raise FormatError("stream ends inside an internal node's children") from None
        if tok == "I":
            if level >= max_depth:
                raise FormatError(f"line {lineno}: internal node below cell level")
            kids = tuple(parse(level + 1) for _ in range(4))
            if all(not isinstance(k, tuple) for k in kids) and len(set(kids)) == 1:
                raise FormatError(f"line {lineno}: internal node with four equal leaves")
            return kids
        if tok.startswith("L "):
            body = tok[2:]
            if body == "*":
                return nodata
            try:
                v = int(body)
            except ValueError:
                raise FormatError(f"line {lineno}: bad leaf value {body!r}") from None
            if v == nodata:
                raise FormatError(f"line {lineno}: nodata must be spelled '*'")
            return v
        raise FormatError(f"line {lineno}: unexpected token {tok!r}")

    nested = parse(0)
    rest = next(tokens, None)
    if rest is not None:
        raise FormatError(f"line {rest[0]}: trailing data after the tree")
    return from_nested(spec, side, nested, nodata)


def read_quadtree(path, nodata: int = NODATA, crs_id: str = "") -> Quadtree:
    return loads_quadtree(Path(path).read_text(encoding="utf-8"), nodata, crs_id)


def dumps_quadtree(qt: Quadtree) -> str:
    buf = io.StringIO()
    dump_quadtree(qt, buf)
    return buf.getvalue()
