"""Rasterize vector data onto a shared grid, compress it into value-based
quadtrees, and run point-in-polygon analysis across representations."""

from .geometry import (
    BoundingBox,
    MultiPolygon,
    Point2D,
    Polygon,
    Polyline,
    clip_polygon_to_rect,
    point_in_multipolygon,
    point_in_polygon,
    point_near_polyline,
    polygon_area,
    sample_boundary_points,
)
from .grid import NODATA, CellIndex, GridSpec, Raster, cell_bounds, cell_of_point, specs_aligned, value_at_point
from .quadtree import (
    Quadtree,
    build_from_raster,
    depth,
    intersect_quadtrees,
    leaf_count,
    node_count,
    query_point,
    to_raster,
)
from .rasterize import CoverageRule, rasterize_dataset, rasterize_points, rasterize_polygons, rasterize_polyline

__version__ = "0.1.0"
