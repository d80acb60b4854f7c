"""Delaunay, Gabriel and relative-neighbourhood graphs, plus the MST.

The relative neighbourhood graph (edges with empty lunes) is computed by
testing the Delaunay edges only. This is exact even for cospherical
inputs: an empty lune implies no point x has d2(x,y) + d2(x,z) <= d2(y,z)
(any such x subtends a right-or-wider angle, so both its edges are
strictly shorter), and an edge passing that closed-ball test has a
witness ball containing no other input point on its boundary, which
places it in every Delaunay triangulation of the cloud.

The Gabriel graph here uses the same closed-ball exclusion, so the chain
mst <= rng <= gabriel <= delaunay holds for every input, ties included.
"""

import logging
import math

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .core import PointCloud, SimplexKey
from .lunes import LUNE_BALL_FACTOR_SQ, _member_mask_flat
from .spatial import RADIUS_SLACK, SpatialIndex, concat_ball_lists
from .unionfind import UnionFind

logger = logging.getLogger(__name__)

_QUERY_CHUNK = 1 << 17


def _complete_pairs(n: int) -> np.ndarray:
    a, b = np.triu_indices(n, k=1)
    return np.column_stack((a + 1, b + 1)).astype(np.intp)


def _delaunay_pairs(cloud: PointCloud) -> np.ndarray:
    """Sorted 1-based vertex pairs of a Delaunay triangulation.

    Falls back to the complete edge set when the cloud admits no
    full-dimensional triangulation (all collinear / coplanar, or too few
    points), which is reported via logging.
    """
    n = cloud.n
    if n <= cloud.dim + 1:
        return _complete_pairs(n)
    try:
        tri = Delaunay(cloud.points)
    except QhullError:
        logger.warning(
            "no full-dimensional Delaunay triangulation (degenerate input); "
            "falling back to the complete edge set"
        )
        return _complete_pairs(n)
    s = tri.simplices
    d = s.shape[1]
    parts = [np.stack((s[:, i], s[:, j]), axis=1) for i in range(d) for j in range(i + 1, d)]
    pairs = np.concatenate(parts, axis=0)
    pairs.sort(axis=1)
    pairs = np.unique(pairs, axis=0)
    return pairs.astype(np.intp) + 1


def _pair_diam_sq(pairs: np.ndarray, cloud: PointCloud) -> np.ndarray:
    d = cloud.points[pairs[:, 0] - 1] - cloud.points[pairs[:, 1] - 1]
    return (d * d).sum(axis=1)


def _pairs_to_edge_set(pairs: np.ndarray, cloud: PointCloud) -> set:
    t = _pair_diam_sq(pairs, cloud)
    return {
        SimplexKey((int(a), int(b)), float(tt)) for (a, b), tt in zip(pairs, t)
    }


def delaunay_edges(cloud: PointCloud) -> set:
    """Edge set of a Delaunay triangulation of the cloud."""
    if cloud.n < 2:
        raise ValueError("need at least two points")
    return _pairs_to_edge_set(_delaunay_pairs(cloud), cloud)


def _empty_lune_mask(pairs: np.ndarray, cloud: PointCloud, index: SpatialIndex) -> np.ndarray:
    """Boolean mask marking the candidate pairs whose lune is empty."""
    m = len(pairs)
    out = np.zeros(m, dtype=bool)
    pts = cloud.points
    for lo in range(0, m, _QUERY_CHUNK):
        hi = min(m, lo + _QUERY_CHUNK)
        chunk = pairs[lo:hi]
        t = _pair_diam_sq(chunk, cloud)
        mids = (pts[chunk[:, 0] - 1] + pts[chunk[:, 1] - 1]) * 0.5
        radii = np.sqrt(LUNE_BALL_FACTOR_SQ * t) * (1.0 + RADIUS_SLACK)
        counts = index.tree.query_ball_point(mids, radii, return_length=True)
        # Only the two endpoints inside the covering ball: lune is empty.
        easy = counts <= 2
        out[lo:hi][easy] = True
        hard = np.flatnonzero(~easy)
        if len(hard) == 0:
            continue
        lists = index.tree.query_ball_point(mids[hard], radii[hard])
        labels, lengths = concat_ball_lists(lists)
        mask, _, _ = _member_mask_flat(
            labels,
            np.repeat(chunk[hard, 0], lengths),
            np.repeat(chunk[hard, 1], lengths),
            np.repeat(t[hard], lengths),
            cloud,
        )
        starts = np.cumsum(lengths) - lengths
        occupied = np.add.reduceat(mask.astype(np.intp), starts) > 0
        out[lo + hard] = ~occupied
    return out


def lune_is_empty(edge: SimplexKey, cloud: PointCloud, index: SpatialIndex) -> bool:
    """True when no point precedes the edge on both endpoints' sides."""
    pairs = np.asarray([edge.vertex_labels], dtype=np.intp)
    return bool(_empty_lune_mask(pairs, cloud, index)[0])


def _rng_pairs(cloud: PointCloud, index: SpatialIndex) -> np.ndarray:
    pairs = _delaunay_pairs(cloud)
    return pairs[_empty_lune_mask(pairs, cloud, index)]


def rng_edges(cloud: PointCloud, index: SpatialIndex) -> set:
    """Relative neighbourhood graph: the edges with empty lunes."""
    if cloud.n < 2:
        raise ValueError("need at least two points")
    return _pairs_to_edge_set(_rng_pairs(cloud, index), cloud)


def gabriel_edges(cloud: PointCloud, index: SpatialIndex) -> set:
    """Edges whose diametral ball excludes every other point.

    A point x blocks the edge (y, z) when d2(x,y) + d2(x,z) <= d2(y,z),
    the closed-ball form of the diametral test. The closed form (rather
    than a strict one) keeps cocircular configurations such as the unit
    square at exactly the four sides and preserves the inclusion chain.
    """
    pairs = _delaunay_pairs(cloud)
    pts = cloud.points
    keep = np.zeros(len(pairs), dtype=bool)
    for lo in range(0, len(pairs), _QUERY_CHUNK):
        hi = min(len(pairs), lo + _QUERY_CHUNK)
        chunk = pairs[lo:hi]
        t = _pair_diam_sq(chunk, cloud)
        mids = (pts[chunk[:, 0] - 1] + pts[chunk[:, 1] - 1]) * 0.5
        radii = np.sqrt(0.25 * t) * (1.0 + RADIUS_SLACK)
        counts = index.tree.query_ball_point(mids, radii, return_length=True)
        easy = counts <= 2
        keep[lo:hi][easy] = True
        hard = np.flatnonzero(~easy)
        if len(hard) == 0:
            continue
        lists = index.tree.query_ball_point(mids[hard], radii[hard])
        labels, lengths = concat_ball_lists(lists)
        ey = np.repeat(chunk[hard, 0], lengths)
        ez = np.repeat(chunk[hard, 1], lengths)
        et = np.repeat(t[hard], lengths)
        P = pts[labels - 1]
        dy = P - pts[ey - 1]
        dz = P - pts[ez - 1]
        blocked = (
            ((dy * dy).sum(axis=1) + (dz * dz).sum(axis=1) <= et)
            & (labels != ey)
            & (labels != ez)
        )
        starts = np.cumsum(lengths) - lengths
        occupied = np.add.reduceat(blocked.astype(np.intp), starts) > 0
        keep[lo + hard] = ~occupied
    return _pairs_to_edge_set(pairs[keep], cloud)


def mst_edge_count(n: int) -> int:
    """Number of edges in any spanning tree of n points."""
    if n < 1:
        raise ValueError("n must be positive")
    return n - 1


def total_bars(cloud: PointCloud, index: SpatialIndex) -> int:
    """Number of degree-1 persistence pairs that are not apparent pairs:
    the RNG edge count minus the spanning-tree edge count."""
    if cloud.n < 2:
        raise ValueError("need at least two points")
    return len(_rng_pairs(cloud, index)) - mst_edge_count(cloud.n)


def mst_edges(cloud: PointCloud, index: SpatialIndex) -> set:
    """Kruskal's minimum spanning tree over the RNG candidate edges,
    with edges taken in the filtration total order."""
    if cloud.n < 1:
        raise ValueError("need at least one point")
    pairs = _rng_pairs(cloud, index) if cloud.n >= 2 else np.empty((0, 2), dtype=np.intp)
    t = _pair_diam_sq(pairs, cloud)
    order = np.lexsort((pairs[:, 1], pairs[:, 0], t))
    uf = UnionFind(cloud.n + 1)
    chosen = []
    need = cloud.n - 1
    for i in order:
        a, b = int(pairs[i, 0]), int(pairs[i, 1])
        if uf.union(a, b):
            chosen.append(SimplexKey((a, b), float(t[i])))
            if len(chosen) == need:
                break
    if len(chosen) != need:
        raise RuntimeError("RNG candidates did not span the cloud; this is a bug")
    return set(chosen)
