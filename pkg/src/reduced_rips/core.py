"""Point clouds, simplex keys, and the filtration total order.

All geometric comparisons in the package are made on squared Euclidean
distances. Squared distances of float64 coordinates are computed the same
way everywhere (elementwise difference, square, left-to-right sum), so any
two code paths that look at the same pair of points obtain bitwise-equal
values. Rooted distances appear only in user-facing output.
"""

from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateInputError, DuplicatePointError


class PointCloud:
    """An immutable set of labelled points in R^2 or R^3.

    Points are labelled 1..n by their input position. Coordinate-identical
    rows are rejected: zero-length edges would break the strictness
    assumptions of the lune predicate downstream.
    """

    __slots__ = ("points", "n", "dim")

    def __init__(self, points):
        arr = np.array(points, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise DegenerateInputError("points must form a 2-D array of shape (n, D)")
        n, dim = arr.shape
        if dim not in (2, 3):
            raise DegenerateInputError(f"dimension must be 2 or 3, got {dim}")
        if n < 1:
            raise DegenerateInputError("point cloud must contain at least one point")
        if not np.isfinite(arr).all():
            raise DegenerateInputError("coordinates must be finite")
        if len(np.unique(arr, axis=0)) != n:
            raise DuplicatePointError("point cloud contains coordinate-identical points")
        arr.setflags(write=False)
        self.points = arr
        self.n = n
        self.dim = dim

    def coords(self, label: int) -> np.ndarray:
        """Coordinates of the point with the given 1-based label."""
        return self.points[label - 1]

    def dist_sq(self, a: int, b: int) -> float:
        """Squared distance between the points labelled a and b."""
        d = self.points[a - 1] - self.points[b - 1]
        return float((d * d).sum())

    def dist_sq_to(self, labels, b: int) -> np.ndarray:
        """Squared distances from each label in `labels` to the point b."""
        d = self.points[np.asarray(labels, dtype=np.intp) - 1] - self.points[b - 1]
        return (d * d).sum(axis=1)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"PointCloud(n={self.n}, dim={self.dim})"


class SimplexKey(NamedTuple):
    """A simplex of dimension 0..2, identified by its sorted vertex labels.

    `diameter_sq` caches the squared diameter (max pairwise squared
    distance), which is exactly recomputable from the cloud.
    """

    vertex_labels: tuple
    diameter_sq: float

    @property
    def dim(self) -> int:
        return len(self.vertex_labels) - 1


def make_key(labels, cloud: PointCloud) -> SimplexKey:
    """Build a SimplexKey for 1-3 distinct labels, computing its diameter."""
    labs = tuple(sorted(int(v) for v in labels))
    if not 1 <= len(labs) <= 3 or len(set(labs)) != len(labs):
        raise ValueError(f"need 1-3 distinct labels, got {labels!r}")
    if labs[0] < 1 or labs[-1] > cloud.n:
        raise ValueError(f"labels out of range 1..{cloud.n}: {labels!r}")
    return SimplexKey(labs, simplex_diameter_sq(labs, cloud))


def simplex_diameter_sq(labels, cloud: PointCloud) -> float:
    """Squared diameter of a simplex: max pairwise squared distance.

    Returns 0.0 for a 0-simplex.
    """
    labs = tuple(labels)
    if len(labs) == 1:
        return 0.0
    if len(labs) == 2:
        return cloud.dist_sq(labs[0], labs[1])
    a, b, c = labs
    return max(cloud.dist_sq(a, b), cloud.dist_sq(a, c), cloud.dist_sq(b, c))


def order_key(key: SimplexKey):
    """Sort key realising the simplex-wise filtration total order.

    Orders by diameter, then dimension, then lexicographically on the
    sorted vertex labels. Equal floating diameters (bitwise) fall through
    to the later clauses, which makes the order total on distinct keys.
    """
    return (key.diameter_sq, len(key.vertex_labels), key.vertex_labels)


def total_order_less(a: SimplexKey, b: SimplexKey) -> bool:
    """True when simplex `a` precedes simplex `b` in the filtration order."""
    return order_key(a) < order_key(b)


def pair_less(a_pair, a_d2: float, b_pair, b_d2: float) -> bool:
    """Total order restricted to 1-simplices given as (sorted pair, d^2)."""
    if a_d2 != b_d2:
        return a_d2 < b_d2
    return a_pair < b_pair


def squared_dists(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Row-wise squared distances from `points` (m, D) to `center` (D,)."""
    d = points - center
    return (d * d).sum(axis=1)
