"""Command-line entry point mirroring the pipeline stages.

Exit status: 0 on success, 2 on usage errors, 1 on data errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import RasterRep, VectorRep, QuadtreeRep, format_summary, run_benchmark, summarize
from .formats import (
    read_ascii_grid,
    read_geojson,
    read_points_geojson,
    read_quadtree,
    write_ascii_grid,
    write_quadtree,
)
from .geometry import BoundingBox, GeometryError
from .grid import GridSpec
from .quadtree import build_from_raster, depth, intersect_quadtrees, leaf_count, node_count
from .rasterize import CoverageRule, rasterize_dataset

log = logging.getLogger("quadpip")


def _extent(text: str) -> BoundingBox:
    try:
        xmin, ymin, xmax, ymax = (float(v) for v in text.split(","))
        return BoundingBox(xmin, ymin, xmax, ymax)
    except (ValueError, GeometryError):
        raise argparse.ArgumentTypeError(
            f"expected xmin,ymin,xmax,ymax with xmin<xmax and ymin<ymax, got {text!r}") from None


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _res_list(text: str) -> list[float]:
    return [_positive(t) for t in text.split(",") if t]


def _count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadpip", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rasterize", help="rasterize a GeoJSON dataset to an ASCII grid")
    p.add_argument("--input", required=True)
    p.add_argument("--extent", required=True, type=_extent)
    p.add_argument("--res", required=True, type=_positive)
    p.add_argument("--rule", choices=["area50", "center"], default="area50")
    p.add_argument("--crs", default="")
    p.add_argument("--out", required=True)

    qt = sub.add_parser("qtree", help="build or inspect quadtrees")
    qsub = qt.add_subparsers(dest="qtree_command", required=True)
    b = qsub.add_parser("build", help="build a quadtree from an ASCII grid")
    b.add_argument("--raster", required=True)
    b.add_argument("--out", required=True)
    s = qsub.add_parser("stats", help="print quadtree size metrics")
    s.add_argument("--in", dest="input", required=True)

    p = sub.add_parser("intersect", help="overlay two aligned quadtrees")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--op", choices=["and", "mask"], default="and")
    p.add_argument("--out", required=True)

    p = sub.add_parser("query", help="point queries against a quadtree, grid or GeoJSON index")
    p.add_argument("--index", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--tol", type=float, default=0.0,
                   help="line/point tolerance for GeoJSON indexes (meters)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="latency and accuracy benchmark")
    p.add_argument("--vector", required=True)
    p.add_argument("--vector2")
    p.add_argument("--extent", required=True, type=_extent)
    p.add_argument("--res", required=True, type=_res_list)
    p.add_argument("--n", type=_count, default=100_000)
    p.add_argument("--runs", type=_count, default=30)
    p.add_argument("--sample", choices=["uniform", "border"], default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rule", choices=["area50", "center"], default="area50")
    p.add_argument("--sequential", action="store_true")
    p.add_argument("--out", required=True)
    return parser


def _cmd_rasterize(args) -> None:
    ds = read_geojson(args.input)
    spec = GridSpec.from_extent(args.extent, args.res, args.crs)
    raster = rasterize_dataset(ds.geoms, ds.value, spec, CoverageRule.from_name(args.rule))
    write_ascii_grid(raster, args.out)


def _cmd_qtree(args) -> None:
    if args.qtree_command == "build":
        write_quadtree(build_from_raster(read_ascii_grid(args.raster)), args.out)
        return
    tree = read_quadtree(args.input)
    cells = tree.spec.cell_count
    leaves = leaf_count(tree)
    print(f"node_count {node_count(tree)}")
    print(f"leaf_count {leaves}")
    print(f"depth {depth(tree)}")
    print(f"cells {cells}")
    print(f"padded_cells {tree.side * tree.side}")
    print(f"compression_ratio {leaves / cells:.6g}")


def _cmd_intersect(args) -> None:
    a = read_quadtree(args.a)
    b = read_quadtree(args.b)
    write_quadtree(intersect_quadtrees(a, b, args.op), args.out)


def _load_index(path: str, tol: float):
    suffix = Path(path).suffix.lower()
    if suffix == ".qt":
        return QuadtreeRep(read_quadtree(path))
    if suffix == ".asc":
        return RasterRep(read_ascii_grid(path))
    if suffix in (".geojson", ".json"):
        return VectorRep([read_geojson(path).geoms], tol)
    raise ValueError(f"cannot tell index type of {path!r}; use .qt, .asc or .geojson")


def _cmd_query(args) -> None:
    rep = _load_index(args.index, args.tol)
    pts = read_points_geojson(args.points)
    hits = rep.contains(pts) if len(pts) else np.zeros(0, dtype=bool)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "hit"])
        for (x, y), hit in zip(pts.tolist(), hits.tolist()):
            writer.writerow([repr(x), repr(y), int(hit)])


def _cmd_bench(args) -> None:
    datasets = [read_geojson(args.vector)]
    if args.vector2:
        datasets.append(read_geojson(args.vector2))
    report = run_benchmark(datasets, args.extent, args.res, args.n, args.runs, args.sample,
                           args.seed, CoverageRule.from_name(args.rule), args.sequential)
    report.write_csv(args.out)
    print(format_summary(summarize(report)))


COMMANDS = {
    "rasterize": _cmd_rasterize,
    "qtree": _cmd_qtree,
    "intersect": _cmd_intersect,
    "query": _cmd_query,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
