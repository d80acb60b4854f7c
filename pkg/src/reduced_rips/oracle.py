"""Brute-force reference pipelines used as ground truth in tests.

Everything here favours directness over speed: the full simplex-wise
filtration is materialised and reduced with the textbook left-to-right
column algorithm. Distances and the total order are recomputed locally
with scalar arithmetic rather than shared with the fast modules, so that
agreement between the two is a meaningful check. Scalar and vectorised
squared distances agree bitwise because both square coordinate
differences and sum them left to right in float64.

Inputs are capped (default 64 points); the column count grows as O(n^3).
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

from .barcode import Barcode, BarcodeInterval, RunStats
from .core import PointCloud, SimplexKey
from .errors import CapExceededError

DEFAULT_CAP = 64


def _check_cap(n: int, cap: int):
    if n > cap:
        raise CapExceededError(f"brute-force oracle capped at n={cap}, got n={n}")


def _scalar_points(cloud: PointCloud):
    return [tuple(float(c) for c in row) for row in cloud.points]


def _d2(p, q) -> float:
    acc = 0.0
    for a, b in zip(p, q):
        d = a - b
        acc += d * d
    return acc


def _pair_d2_table(pts):
    n = len(pts)
    table = {}
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            table[(a, b)] = _d2(pts[a - 1], pts[b - 1])
    return table


def _edge_lt(p, dp, q, dq) -> bool:
    # total order restricted to 1-simplices: diameter, then sorted labels
    if dp != dq:
        return dp < dq
    return p < q


def enumerate_filtration(cloud: PointCloud, max_dim: int = 2, cap: int = DEFAULT_CAP):
    """All simplices of dimension <= max_dim sorted by the filtration order.

    Returns a list of (vertex_labels, diameter_sq) pairs; list positions
    realise the filtration indices. Faces always precede cofaces.
    """
    if max_dim not in (2, 3):
        raise ValueError("max_dim must be 2 or 3")
    _check_cap(cloud.n, cap)
    n = cloud.n
    pts = _scalar_points(cloud)
    d2 = _pair_d2_table(pts)

    simplices = [((a,), 0.0) for a in range(1, n + 1)]
    for pair, dist in d2.items():
        simplices.append((pair, dist))
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            dab = d2[(a, b)]
            for c in range(b + 1, n + 1):
                diam = max(dab, d2[(a, c)], d2[(b, c)])
                simplices.append(((a, b, c), diam))
    if max_dim == 3:
        for a in range(1, n + 1):
            for b in range(a + 1, n + 1):
                for c in range(b + 1, n + 1):
                    dabc = max(d2[(a, b)], d2[(a, c)], d2[(b, c)])
                    for e in range(c + 1, n + 1):
                        diam = max(dabc, d2[(a, e)], d2[(b, e)], d2[(c, e)])
                        simplices.append(((a, b, c, e), diam))

    simplices.sort(key=lambda s: (s[1], len(s[0]), s[0]))
    return simplices


def _reduce_degree1(filtration):
    """Left-to-right reduction of 2-simplex columns over 1-simplex rows.

    Returns (pairs, empty_columns) where pairs is a list of
    (row_position, column_position) persistence pairs and empty_columns
    the positions of 2-simplices whose column reduced to zero.
    """
    pos = {labels: i for i, (labels, _) in enumerate(filtration)}
    lowmap = {}
    pairs = []
    empties = []
    for j, (labels, _) in enumerate(filtration):
        if len(labels) != 3:
            continue
        a, b, c = labels
        col = {pos[(a, b)], pos[(a, c)], pos[(b, c)]}
        while col:
            low = max(col)
            other = lowmap.get(low)
            if other is None:
                lowmap[low] = col
                pairs.append((low, j))
                break
            col = col ^ other
        else:
            empties.append(j)
    return pairs, empties


def _intervals_from_pairs(filtration, pairs) -> List[BarcodeInterval]:
    out = []
    for low, j in pairs:
        e_labels, e_d2 = filtration[low]
        t_labels, t_d2 = filtration[j]
        if e_d2 < t_d2:
            out.append(
                BarcodeInterval(
                    birth=math.sqrt(e_d2),
                    death=math.sqrt(t_d2),
                    birth_simplex=SimplexKey(e_labels, e_d2),
                    death_simplex=SimplexKey(t_labels, t_d2),
                )
            )
    return out


def brute_force_vr_ph1(cloud: PointCloud, cap: int = DEFAULT_CAP) -> Barcode:
    """Degree-1 barcode via the standard filtration and textbook reduction."""
    _check_cap(cloud.n, cap)
    filtration = enumerate_filtration(cloud, max_dim=2, cap=cap)
    pairs, _ = _reduce_degree1(filtration)
    intervals = _intervals_from_pairs(filtration, pairs)
    n_edges = sum(1 for labels, _ in filtration if len(labels) == 2)
    n_tris = sum(1 for labels, _ in filtration if len(labels) == 3)
    stats = RunStats(
        n_points=cloud.n,
        dim=cloud.dim,
        edges_processed=n_edges,
        triangles_created=n_tris,
    )
    return Barcode(intervals=intervals, stats=stats)


@dataclass(frozen=True)
class PairClassification:
    """One degree-1 persistence pair with its apparent-pair verdict."""

    birth_labels: tuple
    death_labels: tuple
    birth_diameter_sq: float
    death_diameter_sq: float
    apparent: bool

    @property
    def persistence_sq_positive(self) -> bool:
        return self.birth_diameter_sq < self.death_diameter_sq


def classify_apparent_pairs(filtration) -> List[PairClassification]:
    """Tag every degree-1 persistence pair as apparent or not.

    A pair (edge, triangle) is apparent when the edge is the last-added
    face of the triangle and the triangle is the first-added coface of
    the edge; both conditions are checked directly against the order.
    """
    pos = {labels: i for i, (labels, _) in enumerate(filtration)}
    labels_of = [labels for labels, _ in filtration]
    all_labels = sorted({v for labels in labels_of for v in labels})
    pairs, _ = _reduce_degree1(filtration)
    out = []
    for low, j in pairs:
        edge = labels_of[low]
        tri = labels_of[j]
        a, b, c = tri
        last_face = max(pos[(a, b)], pos[(a, c)], pos[(b, c)])
        cond_face = last_face == low
        y, z = edge
        first_coface = min(
            pos[tuple(sorted((y, z, x)))] for x in all_labels if x != y and x != z
        )
        cond_coface = first_coface == j
        out.append(
            PairClassification(
                birth_labels=edge,
                death_labels=tri,
                birth_diameter_sq=filtration[low][1],
                death_diameter_sq=filtration[j][1],
                apparent=cond_face and cond_coface,
            )
        )
    return out


def _lune_of_edge(edge, edge_d2, n, d2_table):
    """Direct evaluation of the lune membership predicate for every point."""
    y, z = edge
    members = []
    for x in range(1, n + 1):
        if x == y or x == z:
            continue
        py = (min(x, y), max(x, y))
        pz = (min(x, z), max(x, z))
        if _edge_lt(py, d2_table[py], edge, edge_d2) and _edge_lt(
            pz, d2_table[pz], edge, edge_d2
        ):
            members.append(x)
    return members


def _lune_component_reps(members, edge, edge_d2, d2_table, selection_rule):
    """Connected components of the lune graph and one label per component."""
    adj = {m: [] for m in members}
    for i, p in enumerate(members):
        for q in members[i + 1 :]:
            pq = (min(p, q), max(p, q))
            if _edge_lt(pq, d2_table[pq], edge, edge_d2):
                adj[p].append(q)
                adj[q].append(p)
    seen = set()
    reps = []
    for m in members:
        if m in seen:
            continue
        comp = [m]
        seen.add(m)
        stack = [m]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    comp.append(v)
                    stack.append(v)
        reps.append(min(comp) if selection_rule == "min" else max(comp))
    return reps


def reduced_filtration(cloud: PointCloud, selection_rule: str = "min", cap: int = DEFAULT_CAP):
    """Materialise the full reduced filtration: every edge, its lune,
    one triangle per lune component under the given selection rule."""
    if selection_rule not in ("min", "max"):
        raise ValueError("selection_rule must be 'min' or 'max'")
    _check_cap(cloud.n, cap)
    n = cloud.n
    pts = _scalar_points(cloud)
    d2 = _pair_d2_table(pts)

    simplices = [((a,), 0.0) for a in range(1, n + 1)]
    for pair, dist in d2.items():
        simplices.append((pair, dist))

    triangles = set()
    for edge, edge_d2 in d2.items():
        members = _lune_of_edge(edge, edge_d2, n, d2)
        if not members:
            continue
        for x in _lune_component_reps(members, edge, edge_d2, d2, selection_rule):
            triangles.add(tuple(sorted((edge[0], edge[1], x))))
    for a, b, c in triangles:
        diam = max(d2[(a, b)], d2[(a, c)], d2[(b, c)])
        simplices.append(((a, b, c), diam))

    simplices.sort(key=lambda s: (s[1], len(s[0]), s[0]))
    return simplices


def brute_force_reduced_ph1(
    cloud: PointCloud, selection_rule: str = "min", cap: int = DEFAULT_CAP
) -> Barcode:
    """Degree-1 barcode of the reduced filtration via textbook reduction."""
    filtration = reduced_filtration(cloud, selection_rule=selection_rule, cap=cap)
    pairs, _ = _reduce_degree1(filtration)
    intervals = _intervals_from_pairs(filtration, pairs)
    n_edges = sum(1 for labels, _ in filtration if len(labels) == 2)
    n_tris = sum(1 for labels, _ in filtration if len(labels) == 3)
    stats = RunStats(
        n_points=cloud.n,
        dim=cloud.dim,
        edges_processed=n_edges,
        triangles_created=n_tris,
    )
    return Barcode(intervals=intervals, stats=stats)
