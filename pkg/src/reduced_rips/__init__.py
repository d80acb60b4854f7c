"""Degree-1 Vietoris-Rips persistence for point clouds in R^2 and R^3.

The engine (`compute_ph1`) streams 1-simplices in filtration order,
builds only the triangles that a lune analysis shows can affect degree-1
pairing, and stops once the relative-neighbourhood-graph edge count says
every non-apparent death has been found. Brute-force reference pipelines
live in `reduced_rips.oracle` for verification.
"""

from .barcode import Barcode, BarcodeInterval, RunStats, barcode_summary
from .core import (
    PointCloud,
    SimplexKey,
    make_key,
    simplex_diameter_sq,
    total_order_less,
)
from .datagen import GeneratorSpec, generate, load_points, save_points
from .errors import (
    CapExceededError,
    DegenerateInputError,
    DuplicatePointError,
    InternalInvariantError,
    InvalidSpecError,
    ParseError,
    ReducedRipsError,
    ResourceLimitError,
)
from .graphs import (
    delaunay_edges,
    gabriel_edges,
    lune_is_empty,
    mst_edge_count,
    mst_edges,
    rng_edges,
    total_bars,
)
from .lunes import (
    LuneResult,
    analyze_lune,
    compute_lune,
    lens_angle_scan,
    lens_ball_pretest,
    lune_components,
)
from .reduction import EdgeIndexRegistry, ReductionState, compute_ph1, process_edge, reduce_and_pair
from .spatial import SpatialIndex, build_index, k_nearest_larger_label, radius_search_closed
from .stream import EdgeStream, init_stream

__version__ = "0.1.0"

__all__ = [
    "Barcode",
    "BarcodeInterval",
    "CapExceededError",
    "DegenerateInputError",
    "DuplicatePointError",
    "EdgeIndexRegistry",
    "EdgeStream",
    "GeneratorSpec",
    "InternalInvariantError",
    "InvalidSpecError",
    "LuneResult",
    "ParseError",
    "PointCloud",
    "ReducedRipsError",
    "ReductionState",
    "ResourceLimitError",
    "RunStats",
    "SimplexKey",
    "SpatialIndex",
    "analyze_lune",
    "barcode_summary",
    "build_index",
    "compute_lune",
    "compute_ph1",
    "delaunay_edges",
    "gabriel_edges",
    "generate",
    "init_stream",
    "k_nearest_larger_label",
    "lens_angle_scan",
    "lens_ball_pretest",
    "load_points",
    "lune_components",
    "lune_is_empty",
    "make_key",
    "mst_edge_count",
    "mst_edges",
    "process_edge",
    "radius_search_closed",
    "reduce_and_pair",
    "rng_edges",
    "save_points",
    "simplex_diameter_sq",
    "total_bars",
    "total_order_less",
]
