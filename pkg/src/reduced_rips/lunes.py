"""Lune membership, lens shortcuts, and lune connected components.

The lune of an edge <yz> is the set of points x whose edges <yx> and <zx>
both precede <yz> in the filtration total order. Membership therefore
admits points at exactly the edge's distance when the tie breaks
lexicographically earlier. All predicates here are evaluated exactly on
the stored float64 coordinates; kd-tree queries only supply candidate
supersets.

Geometric facts used for candidate balls (r = edge length, m = midpoint):
  - lune(<yz>) is contained in the closed ball B(m, r * sqrt(3)/2);
  - points with angle(y x z) > pi/2 are exactly the open diametral ball
    B(m, r/2), so every lens point lies there;
  - the open ball B(m, r * (2 - sqrt(3))/2) is inscribed in the region
    where angle(y x z) > 5*pi/6.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, QhullError

from .core import PointCloud, SimplexKey, make_key
from .errors import InternalInvariantError
from .spatial import SpatialIndex

# Squared radius factors relative to the squared edge length.
LUNE_BALL_FACTOR_SQ = 0.75
DIAMETRAL_FACTOR_SQ = 0.25
PRETEST_FACTOR_SQ = ((2.0 - math.sqrt(3.0)) / 2.0) ** 2

SMALL_LUNE = 64

_BIG_LABEL = np.iinfo(np.int64).max


def component_bound(dim: int) -> int:
    """Upper bound on the number of lune components in R^dim."""
    return 4 ** dim


def _member_mask_flat(
    flat: np.ndarray,
    ey: np.ndarray,
    ez: np.ndarray,
    et: np.ndarray,
    cloud: PointCloud,
):
    """Exact lune-membership test, vectorised over concatenated segments.

    `flat` holds candidate labels; `ey`, `ez`, `et` carry each candidate's
    edge endpoints (ey < ez) and squared edge length, already repeated to
    align with `flat`. Returns (mask, d2y, d2z).
    """
    pts = cloud.points
    P = pts[flat - 1]
    dy = P - pts[ey - 1]
    d2y = (dy * dy).sum(axis=1)
    dz = P - pts[ez - 1]
    d2z = (dz * dz).sum(axis=1)
    p0 = np.minimum(flat, ey)
    p1 = np.maximum(flat, ey)
    lex_y = (p0 < ey) | ((p0 == ey) & (p1 < ez))
    q0 = np.minimum(flat, ez)
    q1 = np.maximum(flat, ez)
    lex_z = (q0 < ey) | ((q0 == ey) & (q1 < ez))
    mask = (
        ((d2y < et) | ((d2y == et) & lex_y))
        & ((d2z < et) | ((d2z == et) & lex_z))
        & (flat != ey)
        & (flat != ez)
    )
    return mask, d2y, d2z


def _member_mask(cand: np.ndarray, y: int, z: int, t: float, cloud: PointCloud):
    """Exact lune-membership test for candidate labels against edge (y, z)."""
    m = len(cand)
    ey = np.full(m, y, dtype=np.intp)
    ez = np.full(m, z, dtype=np.intp)
    et = np.full(m, t, dtype=np.float64)
    return _member_mask_flat(cand, ey, ez, et, cloud)


def _lens_mask(d2y: np.ndarray, d2z: np.ndarray, t: float) -> np.ndarray:
    """Exact test for angle(y x z) > 5*pi/6 from squared distances.

    cos < -sqrt(3)/2 is equivalent to L < 0 and L^2 > 3ab for
    L = a + b - c, which avoids square roots entirely.
    """
    L = d2y + d2z - t
    return (L < 0) & (L * L > 3.0 * d2y * d2z)


def _midpoint(cloud: PointCloud, y: int, z: int) -> np.ndarray:
    return (cloud.points[y - 1] + cloud.points[z - 1]) * 0.5


def _lune_member_array(y: int, z: int, t: float, cloud: PointCloud, index: SpatialIndex) -> np.ndarray:
    """Sorted array of lune member labels for the edge (y, z) of squared length t."""
    cand = index.ball_labels(_midpoint(cloud, y, z), math.sqrt(LUNE_BALL_FACTOR_SQ * t))
    if len(cand) == 0:
        return cand
    mask, _, _ = _member_mask(cand, y, z, t, cloud)
    members = cand[mask]
    members.sort()
    return members


def _edge_of(edge) -> Tuple[int, int, float]:
    y, z = edge.vertex_labels
    return y, z, edge.diameter_sq


def compute_lune(edge: SimplexKey, cloud: PointCloud, index: SpatialIndex) -> set:
    """The lune of a 1-simplex: all x with <yx> and <zx> before <yz>."""
    y, z, t = _edge_of(edge)
    return set(int(v) for v in _lune_member_array(y, z, t, cloud, index))


def lens_ball_pretest(
    edge: SimplexKey, cloud: PointCloud, index: SpatialIndex, rule: str = "min"
) -> Optional[int]:
    """Look for a lens point inside the small midpoint ball.

    Queries the ball of radius (2 - sqrt(3))/2 times the edge length at
    the midpoint; any interior point has angle(y x z) > 5*pi/6. Hits are
    confirmed against the exact cosine bound so a boundary-grazing
    candidate cannot force a single-component claim. Returns the witness
    of smallest (rule 'min') or largest (rule 'max') label, or None.
    """
    y, z, t = _edge_of(edge)
    cand = index.ball_labels(_midpoint(cloud, y, z), math.sqrt(PRETEST_FACTOR_SQ * t))
    if len(cand) == 0:
        return None
    cand = cand[(cand != y) & (cand != z)]
    if len(cand) == 0:
        return None
    d2y = cloud.dist_sq_to(cand, y)
    d2z = cloud.dist_sq_to(cand, z)
    hits = cand[_lens_mask(d2y, d2z, t)]
    if len(hits) == 0:
        return None
    return int(hits.min() if rule == "min" else hits.max())


def lens_angle_scan(
    members: Iterable[int], edge: SimplexKey, cloud: PointCloud, rule: str = "min"
) -> Optional[int]:
    """First lune member (in label order) subtending an angle above 5*pi/6.

    Under rule 'max' the scan runs in decreasing label order instead.
    """
    y, z, t = _edge_of(edge)
    mem = np.asarray(sorted(members), dtype=np.intp)
    if len(mem) == 0:
        return None
    d2y = cloud.dist_sq_to(mem, y)
    d2z = cloud.dist_sq_to(mem, z)
    hits = mem[_lens_mask(d2y, d2z, t)]
    if len(hits) == 0:
        return None
    return int(hits[0] if rule == "min" else hits[-1])


def _owners_small(mem: np.ndarray, y: int, z: int, t: float, cloud: PointCloud) -> np.ndarray:
    """Component owner (smallest member label) via min-label propagation
    on the complete threshold graph; exact for any tie pattern."""
    pts = cloud.points[mem - 1]
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    p0 = np.minimum.outer(mem, mem)
    p1 = np.maximum.outer(mem, mem)
    lex = (p0 < y) | ((p0 == y) & (p1 < z))
    adj = (d2 < t) | ((d2 == t) & lex)
    np.fill_diagonal(adj, False)
    owner = mem.astype(np.int64)
    while True:
        neigh = np.where(adj, owner[None, :], _BIG_LABEL).min(axis=1)
        new = np.minimum(owner, neigh)
        if np.array_equal(new, owner):
            return owner
        owner = new


def _owners_delaunay(mem: np.ndarray, y: int, z: int, t: float, cloud: PointCloud) -> np.ndarray:
    """Component owners via the filtered Delaunay edges of the member set.

    The triangulation carries the same connectivity as the complete
    threshold graph because a minimum spanning tree of the members (under
    the total order) lies inside it. Degenerate member sets fall back to
    the complete graph.
    """
    pts = cloud.points[mem - 1]
    try:
        tri = Delaunay(pts)
    except QhullError:
        return _owners_small(mem, y, z, t, cloud)
    simplices = tri.simplices
    d = simplices.shape[1]
    ii = np.concatenate([simplices[:, i] for i in range(d) for j in range(i + 1, d)])
    jj = np.concatenate([simplices[:, j] for i in range(d) for j in range(i + 1, d)])
    diff = pts[ii] - pts[jj]
    d2 = (diff * diff).sum(axis=1)
    a = mem[ii]
    b = mem[jj]
    p0 = np.minimum(a, b)
    p1 = np.maximum(a, b)
    lex = (p0 < y) | ((p0 == y) & (p1 < z))
    keep = (d2 < t) | ((d2 == t) & lex)
    m = len(mem)
    graph = coo_matrix((np.ones(int(keep.sum()), dtype=bool), (ii[keep], jj[keep])), shape=(m, m))
    _, comp_ids = connected_components(graph, directed=False)
    # normalise to min-label owners for parity with the small path
    owner = np.full(m, _BIG_LABEL, dtype=np.int64)
    np.minimum.at(owner, comp_ids, mem.astype(np.int64))
    return owner[comp_ids]


def _component_reps(
    mem: np.ndarray, y: int, z: int, t: float, cloud: PointCloud, rule: str, small_lune: int
) -> Tuple[List[List[int]], List[int]]:
    """Components (by increasing smallest label) and their representatives.

    `mem` must be sorted ascending. Raises when the component count
    exceeds the dimension bound, which indicates an internal bug.
    """
    if len(mem) == 1:
        lab = int(mem[0])
        return [[lab]], [lab]
    if len(mem) <= small_lune:
        owner = _owners_small(mem, y, z, t, cloud)
    else:
        owner = _owners_delaunay(mem, y, z, t, cloud)
    uniq = np.unique(owner)
    comps = [[int(v) for v in mem[owner == o]] for o in uniq]
    if len(comps) > component_bound(cloud.dim):
        raise InternalInvariantError(
            f"lune of ({y},{z}) has {len(comps)} components, "
            f"exceeding the {component_bound(cloud.dim)} bound for R^{cloud.dim}"
        )
    reps = [c[0] if rule == "min" else c[-1] for c in comps]
    return comps, reps


def lune_components(
    members: Iterable[int],
    edge: SimplexKey,
    cloud: PointCloud,
    rule: str = "min",
    small_lune: int = SMALL_LUNE,
) -> Tuple[List[List[int]], List[int]]:
    """Partition a nonempty lune into connected components.

    Members p, q are adjacent when <pq> precedes the edge in the total
    order. Lunes of up to `small_lune` members use the complete graph;
    larger ones use the filtered Delaunay edges of the member set.
    Components are listed by increasing smallest label; the representative
    of each component is its smallest (rule 'min') or largest
    (rule 'max') label.
    """
    mem = np.asarray(sorted(set(int(v) for v in members)), dtype=np.intp)
    if len(mem) == 0:
        raise ValueError("lune_components requires a nonempty member set")
    y, z, t = _edge_of(edge)
    return _component_reps(mem, y, z, t, cloud, rule, small_lune)


@dataclass(frozen=True)
class LuneResult:
    """Full description of one edge's lune: members, partition, chosen labels."""

    edge: SimplexKey
    members: frozenset
    components: tuple
    representatives: tuple


def analyze_lune(
    edge: SimplexKey,
    cloud: PointCloud,
    index: SpatialIndex,
    rule: str = "min",
    small_lune: int = SMALL_LUNE,
) -> LuneResult:
    """Compute the lune and its full component structure, no shortcuts."""
    y, z, t = _edge_of(edge)
    mem = _lune_member_array(y, z, t, cloud, index)
    if len(mem) == 0:
        return LuneResult(edge, frozenset(), (), ())
    comps, reps = lune_components(mem, edge, cloud, rule=rule, small_lune=small_lune)
    return LuneResult(
        edge,
        frozenset(int(v) for v in mem),
        tuple(tuple(c) for c in comps),
        tuple(reps),
    )


def resolve_edge(
    y: int,
    z: int,
    t: float,
    cloud: PointCloud,
    index: SpatialIndex,
    rule: str = "min",
    small_lune: int = SMALL_LUNE,
) -> Tuple[int, ...]:
    """Representatives for the edge's lune, using the lens shortcuts.

    Returns () for an empty lune, a single witness label when a lens
    point certifies one component, and otherwise one representative per
    component. This is the reference semantics that the batched resolver
    in the reduction engine must reproduce edge for edge.
    """
    edge = SimplexKey((y, z), t)
    w = lens_ball_pretest(edge, cloud, index, rule=rule)
    if w is not None:
        return (w,)
    mem = _lune_member_array(y, z, t, cloud, index)
    if len(mem) == 0:
        return ()
    w = lens_angle_scan(mem, edge, cloud, rule=rule)
    if w is not None:
        return (w,)
    _, reps = lune_components(mem, edge, cloud, rule=rule, small_lune=small_lune)
    return tuple(reps)
