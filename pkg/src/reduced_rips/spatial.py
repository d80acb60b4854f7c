"""kd-tree queries over a point cloud, answered in terms of 1-based labels.

The tree (scipy's cKDTree) is only ever used to produce candidate
supersets; membership decisions are re-made with exact comparisons on the
stored float64 coordinates, so query results do not depend on the tree's
internal arithmetic. Query radii passed to the tree are inflated by a
relative epsilon to keep true boundary points inside the candidate set.
"""

from itertools import chain

import numpy as np
from scipy.spatial import cKDTree

from .core import PointCloud, squared_dists

# Relative inflation applied to tree query radii; generous against the
# ~1 ulp error of the tree's internal distance evaluation.
RADIUS_SLACK = 1e-9


def concat_ball_lists(lists):
    """Flatten kd-tree ball-query result lists into 1-based labels plus
    per-query segment lengths."""
    lengths = np.fromiter(map(len, lists), dtype=np.intp, count=len(lists))
    total = int(lengths.sum())
    flat = np.fromiter(chain.from_iterable(lists), dtype=np.intp, count=total)
    return flat + 1, lengths


class SpatialIndex:
    """Read-only spatial index over a cloud; safe for concurrent queries."""

    __slots__ = ("cloud", "tree")

    def __init__(self, cloud: PointCloud):
        self.cloud = cloud
        self.tree = cKDTree(cloud.points)

    def ball_labels(self, center: np.ndarray, radius: float) -> np.ndarray:
        """Candidate labels within `radius` of `center` (slightly inflated)."""
        idx = self.tree.query_ball_point(center, radius * (1.0 + RADIUS_SLACK))
        return np.asarray(idx, dtype=np.intp) + 1


def build_index(cloud: PointCloud) -> SpatialIndex:
    """Build the kd-tree index over all points of the cloud."""
    return SpatialIndex(cloud)


def radius_search_closed(index: SpatialIndex, center, r: float) -> set:
    """Exactly the labels x with d(x, center) <= r, compared on squares."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    center = np.asarray(center, dtype=np.float64)
    cand = index.ball_labels(center, r)
    if len(cand) == 0:
        return set()
    d2 = squared_dists(index.cloud.points[cand - 1], center)
    return set(int(x) for x in cand[d2 <= r * r])


def k_nearest_larger_label(index: SpatialIndex, x: int, k: int) -> list:
    """Up to k nearest neighbours of point x among labels greater than x,
    sorted by increasing distance with ties broken by increasing label."""
    if k < 1:
        raise ValueError("k must be at least 1")
    cloud = index.cloud
    n = cloud.n
    larger = n - x
    if larger <= 0:
        return []
    want = min(k, larger)

    if larger <= max(4 * k, 64) or n <= 256:
        labels = np.arange(x + 1, n + 1, dtype=np.intp)
        d2 = cloud.dist_sq_to(labels, x)
        order = np.lexsort((labels, d2))
        return [int(labels[i]) for i in order[:want]]

    # Grow a k-NN query until enough larger-label points are seen, then
    # take all points within the k-th candidate distance so that boundary
    # ties cannot be missed, and order them exactly.
    pt = cloud.coords(x)
    kq = min(n, k + 1)
    while True:
        _, ii = index.tree.query(pt, k=kq)
        ii = np.atleast_1d(ii)
        sel = ii + 1 > x
        if sel.sum() >= want or kq >= n:
            break
        kq = min(n, kq * 2)
    cand = ii[sel] + 1
    d2 = cloud.dist_sq_to(cand, x)
    order = np.lexsort((cand, d2))
    kth_d2 = float(d2[order[want - 1]])
    ball = index.ball_labels(pt, float(np.sqrt(kth_d2)))
    ball = ball[ball > x]
    d2b = cloud.dist_sq_to(ball, x)
    keep = d2b <= kth_d2
    ball, d2b = ball[keep], d2b[keep]
    order = np.lexsort((ball, d2b))
    return [int(ball[i]) for i in order[:want]]
