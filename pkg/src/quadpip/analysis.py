"""Experiment engine: batched PiP over vector, raster and quadtree
representations, accuracy against the vector baseline, and latency rows."""

from __future__ import annotations

import csv
import io
import logging
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .geometry import (
    BoundingBox,
    MultiPolygon,
    Point2D,
    Polygon,
    Polyline,
    points_in_multipolygon,
    points_near_polyline,
    sample_boundary_points,
)
from .grid import GridSpec, Raster, values_at_points
from .quadtree import (
    Quadtree,
    build_from_raster,
    combine_rasters,
    depth,
    intersect_quadtrees,
    leaf_count,
    node_count,
    query_points,
)
from .rasterize import DEFAULT_RULE, CoverageRule, rasterize_dataset

log = logging.getLogger(__name__)

CHUNK = 1000
CSV_HEADER = ["representation", "resolution_m", "run", "batch_ns",
              "per_query_median_ns", "accuracy", "n", "seed"]
LATENCY_COLUMNS = ("batch_ns", "per_query_median_ns")


class Representation(str, Enum):
    VECTOR = "vector"
    RASTER = "raster"
    QUADTREE = "quadtree"


# --- representation handles ------------------------------------------------------

def _geom_bbox(g) -> tuple[float, float, float, float]:
    if isinstance(g, Point2D):
        return g.x, g.y, g.x, g.y
    return g.bbox


class VectorRep:
    """Exact predicate over one or more geometry lists.

    A point hits a list when it lies in any polygon (boundary-inclusive) or
    within ``tol`` of any polyline or point; with several lists it must hit
    all of them.
    """

    tag = Representation.VECTOR

    def __init__(self, datasets: Sequence[Sequence], tol: float = 0.0):
        if tol < 0:
            raise ValueError("tolerance must be non-negative")
        self.datasets = [list(d) for d in datasets]
        self.tol = float(tol)
        self._boxes = [np.array([_geom_bbox(g) for g in d], dtype=float).reshape(-1, 4)
                       for d in self.datasets]

    def _hits(self, geoms, boxes, xy) -> np.ndarray:
        out = np.zeros(len(xy), dtype=bool)
        t = self.tol
        near = ((xy[:, None, 0] >= boxes[None, :, 0] - t) & (xy[:, None, 0] <= boxes[None, :, 2] + t)
                & (xy[:, None, 1] >= boxes[None, :, 1] - t) & (xy[:, None, 1] <= boxes[None, :, 3] + t))
        for k in np.flatnonzero(near.any(axis=0)):
            idx = np.flatnonzero(near[:, k] & ~out)
            if idx.size == 0:
                continue
            g = geoms[k]
            pts = xy[idx]
            if isinstance(g, (MultiPolygon, Polygon)):
                mp = g if isinstance(g, MultiPolygon) else MultiPolygon([g])
                hit = points_in_multipolygon(pts, mp)
            elif isinstance(g, Polyline):
                hit = points_near_polyline(pts, g, t)
            else:
                hit = np.hypot(pts[:, 0] - g.x, pts[:, 1] - g.y) <= t
            out[idx] = hit
        return out

    def contains(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        result = np.ones(len(xy), dtype=bool)
        for geoms, boxes in zip(self.datasets, self._boxes):
            pending = np.flatnonzero(result)
            if pending.size == 0:
                break
            result[pending] = self._hits(geoms, boxes, xy[pending])
        return result


class RasterRep:
    tag = Representation.RASTER

    def __init__(self, raster: Raster):
        self.raster = raster

    def contains(self, xy: np.ndarray) -> np.ndarray:
        vals, present = values_at_points(self.raster, xy)
        return present & (vals != 0)


class QuadtreeRep:
    tag = Representation.QUADTREE

    def __init__(self, tree: Quadtree):
        self.tree = tree

    def contains(self, xy: np.ndarray) -> np.ndarray:
        vals, present = query_points(self.tree, xy)
        return present & (vals != 0)


def pip_batch(rep, pts) -> np.ndarray:
    """Boolean hit per point, in input order."""
    return rep.contains(np.asarray(pts, dtype=float).reshape(-1, 2))


@dataclass
class TimedBatch:
    hits: np.ndarray
    batch_ns: int
    chunk_ns: list[int]
    chunk_sizes: list[int]

    @property
    def per_query_median_ns(self) -> float:
        return statistics.median(t / n for t, n in zip(self.chunk_ns, self.chunk_sizes))


def timed_pip_batch(rep, pts: np.ndarray, chunk: int = CHUNK, workers: int = 1) -> TimedBatch:
    """Run :func:`pip_batch` chunk by chunk, timing the whole batch and
    each chunk with a monotonic clock. ``workers > 1`` fans chunks out to
    threads; results are reassembled in input order."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    bounds = [(s, min(s + chunk, len(pts))) for s in range(0, len(pts), chunk)]

    def run(span):
        s, e = span
        t0 = time.perf_counter_ns()
        hits = rep.contains(pts[s:e])
        return hits, time.perf_counter_ns() - t0

    t0 = time.perf_counter_ns()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    batch_ns = time.perf_counter_ns() - t0
    hits = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, dtype=bool)
    return TimedBatch(hits, batch_ns, [p[1] for p in parts], [e - s for s, e in bounds])


# --- accuracy ------------------------------------------------------------------

@dataclass(frozen=True)
class AccuracyReport:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 1.0


def accuracy(baseline, candidate) -> AccuracyReport:
    base = np.asarray(baseline, dtype=bool)
    cand = np.asarray(candidate, dtype=bool)
    if base.shape != cand.shape:
        raise ValueError(f"length mismatch: {base.size} baseline vs {cand.size} candidate")
    return AccuracyReport(
        tp=int(np.count_nonzero(base & cand)),
        tn=int(np.count_nonzero(~base & ~cand)),
        fp=int(np.count_nonzero(~base & cand)),
        fn=int(np.count_nonzero(base & ~cand)),
    )


# --- sampling -----------------------------------------------------------------

def sample_uniform_points(bbox: BoundingBox, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(bbox.xmin, bbox.xmax, n)
    y = rng.uniform(bbox.ymin, bbox.ymax, n)
    return np.column_stack([x, y])


def sample_points(sampler: str, extent: BoundingBox, geoms, n: int, seed: int) -> np.ndarray:
    if sampler == "uniform":
        return sample_uniform_points(extent, n, seed)
    if sampler == "border":
        return sample_boundary_points([g for g in geoms if not isinstance(g, Point2D)], n, seed)
    raise ValueError(f"unknown sampler {sampler!r}; expected uniform or border")


# --- benchmark -------------------------------------------------------------------

@dataclass
class BenchRow:
    representation: Representation
    resolution: Optional[float]
    run: int
    batch_ns: int
    per_query_median_ns: float
    accuracy: float
    n: int
    seed: int

    def csv_fields(self) -> list[str]:
        return [
            self.representation.value,
            "" if self.resolution is None else _fmt(self.resolution),
            str(self.run),
            str(self.batch_ns),
            _fmt(self.per_query_median_ns),
            repr(float(self.accuracy)),
            str(self.n),
            str(self.seed),
        ]


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


@dataclass
class IndexStats:
    resolution: float
    cells: int
    padded_cells: int
    nodes: int
    leaves: int
    depth: int
    raster_hits: int = 0

    @property
    def compression_ratio(self) -> float:
        return self.leaves / self.cells

    @classmethod
    def of(cls, qt: Quadtree, resolution: float) -> "IndexStats":
        return cls(resolution, qt.spec.cell_count, qt.side * qt.side,
                   node_count(qt), leaf_count(qt), depth(qt))


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    index_stats: list[IndexStats] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow(row.csv_fields())
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "BenchReport":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = []
        for rec in reader:
            rows.append(BenchRow(Representation(rec[0]), float(rec[1]) if rec[1] else None,
                                 int(rec[2]), int(rec[3]), float(rec[4]), float(rec[5]),
                                 int(rec[6]), int(rec[7])))
        return cls(rows)


def _build_indexes(datasets, spec: GridSpec, rule: CoverageRule):
    rasters = [rasterize_dataset(ds.geoms, ds.value, spec, rule) for ds in datasets]
    trees = [build_from_raster(r) for r in rasters]
    raster, tree = rasters[0], trees[0]
    for r, t in zip(rasters[1:], trees[1:]):
        raster = combine_rasters(raster, r, "and")
        tree = intersect_quadtrees(tree, t, "and")
    return raster, tree


def run_benchmark(datasets, extent: BoundingBox, resolutions: Iterable[float], n: int,
                  runs: int, sampler: str = "uniform", seed: int = 0,
                  rule: CoverageRule = DEFAULT_RULE, sequential: bool = True,
                  workers: int = 4, chunk: int = CHUNK, line_tol: Optional[float] = None,
                  crs_id: str = "") -> BenchReport:
    """Time and score PiP over the three representations.

    ``datasets`` is a list of :class:`~quadpip.formats.Dataset`; with two or
    more, every representation answers the conjunction (intersection) of
    them. Polyline and point features use ``line_tol`` on the vector side,
    by default half the resolution.
    """
    if n < 1 or runs < 1:
        raise ValueError("n and runs must be >= 1")
    datasets = list(datasets)
    all_geoms = [g for ds in datasets for g in ds.geoms]
    nworkers = 1 if sequential else workers
    report = BenchReport()
    for res in resolutions:
        res = float(res)
        spec = GridSpec.from_extent(extent, res, crs_id)
        raster, tree = _build_indexes(datasets, spec, rule)
        stats = IndexStats.of(tree, res)
        stats.raster_hits = int(np.count_nonzero(raster.presence()))
        report.index_stats.append(stats)
        log.info("resolution %s: %dx%d cells, %d leaves", res, spec.nrows, spec.ncols, stats.leaves)
        tol = res / 2 if line_tol is None else line_tol
        reps = [VectorRep([ds.geoms for ds in datasets], tol), RasterRep(raster), QuadtreeRep(tree)]
        warm = sample_points(sampler, extent, all_geoms, min(n, chunk), seed)
        for rep in reps:
            rep.contains(warm)
        for run in range(1, runs + 1):
            run_seed = seed + run
            pts = sample_points(sampler, extent, all_geoms, n, run_seed)
            baseline = None
            for rep in reps:
                timed = timed_pip_batch(rep, pts, chunk, nworkers)
                if rep.tag is Representation.VECTOR:
                    baseline = timed.hits
                acc = accuracy(baseline, timed.hits).accuracy
                report.rows.append(BenchRow(
                    rep.tag, None if rep.tag is Representation.VECTOR else res, run,
                    timed.batch_ns, timed.per_query_median_ns, acc, n, run_seed))
    return report


@dataclass
class SummaryRow:
    representation: Representation
    resolution: Optional[float]
    median_batch_ns: float
    median_per_query_ns: float
    mean_accuracy: float
    speedup_vs_vector: Optional[float]


def summarize(report: BenchReport) -> list[SummaryRow]:
    """Median latencies and mean accuracy per (representation, resolution),
    with the vector-to-representation speedup of batch medians."""
    if not report.rows:
        raise ValueError("empty benchmark report")
    groups: dict[tuple, list[BenchRow]] = {}
    for row in report.rows:
        groups.setdefault((row.representation, row.resolution), []).append(row)
    vector_rows = [r for r in report.rows if r.representation is Representation.VECTOR]
    vector_median = statistics.median(r.batch_ns for r in vector_rows) if vector_rows else None
    out = []
    for (rep, res), rows in groups.items():
        med = statistics.median(r.batch_ns for r in rows)
        speed = round(vector_median / med, 2) if vector_median and med else None
        out.append(SummaryRow(rep, res, med, statistics.median(r.per_query_median_ns for r in rows),
                              statistics.fmean(r.accuracy for r in rows), speed))
    return out


def format_summary(rows: Sequence[SummaryRow]) -> str:
    lines = [f"{'representation':<15}{'res_m':>8}{'median_batch_ms':>17}"
             f"{'per_query_ns':>14}{'accuracy':>10}{'speedup':>9}"]
    for s in rows:
        res = "-" if s.resolution is None else _fmt(s.resolution)
        speed = "-" if s.speedup_vs_vector is None else f"{s.speedup_vs_vector:.2f}"
        lines.append(f"{s.representation.value:<15}{res:>8}{s.median_batch_ns / 1e6:>17.3f}"
                     f"{s.median_per_query_ns:>14.1f}{s.mean_accuracy:>10.4f}{speed:>9}")
    return "\n".join(lines)
