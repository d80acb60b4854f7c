"""The main persistence loop: stream edges in filtration order, analyse
each edge's lune, create one boundary column per lune component, reduce
columns against the store of previous columns, and stop once the
predetermined number of non-apparent deaths has been found.

Columns hold the row indices of their nonzero entries (Z2 coefficients),
where rows are 1-simplices indexed lazily in emission order; 2-simplices
never need global indices. The column store maps each reduced column's
lowest-1 row to the column; at most one column per key ever exists, which
is the reduced-matrix property. A hash map realises the keyed store (the
algorithm only ever needs exact-key search and insert).

The per-chunk lune resolver batches kd-tree work across edges but is
required to reproduce, edge for edge, the reference semantics of
`lunes.resolve_edge`; tests enforce this.
"""

import math
import os
import resource
import time
from array import array
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from .barcode import Barcode, BarcodeInterval, RunStats
from .core import PointCloud, SimplexKey
from .errors import DegenerateInputError, InternalInvariantError, ResourceLimitError
from .graphs import _rng_pairs, mst_edge_count
from .lunes import (
    DIAMETRAL_FACTOR_SQ,
    LUNE_BALL_FACTOR_SQ,
    PRETEST_FACTOR_SQ,
    SMALL_LUNE,
    _component_reps,
    _member_mask_flat,
    component_bound,
    resolve_edge,
)
from .spatial import RADIUS_SLACK, SpatialIndex, build_index, concat_ball_lists
from .stream import EdgeStream, init_stream

_DENSE_REGISTRY_N = 12000
_CHUNK_EDGES = 4096

MEM_LIMIT_ENV = "REDUCED_RIPS_MEM_LIMIT_MB"


class EdgeIndexRegistry:
    """Assigns consecutive indices to 1-simplices in emission order and
    answers pair -> index and index -> pair lookups."""

    __slots__ = ("n", "_table", "_map", "_ys", "_zs", "_d2")

    def __init__(self, n: int):
        self.n = n
        if n <= _DENSE_REGISTRY_N:
            self._table = np.full((n + 1, n + 1), -1, dtype=np.int32)
            self._map = None
        else:
            self._table = None
            self._map = {}
        self._ys = array("i")
        self._zs = array("i")
        self._d2 = array("d")

    def assign(self, y: int, z: int, d2: float) -> int:
        idx = len(self._ys)
        self._ys.append(y)
        self._zs.append(z)
        self._d2.append(d2)
        if self._table is not None:
            self._table[y, z] = idx
        else:
            self._map[y * (self.n + 1) + z] = idx
        return idx

    def index_of(self, y: int, z: int) -> int:
        if self._table is not None:
            idx = int(self._table[y, z])
            if idx < 0:
                raise InternalInvariantError(f"edge ({y},{z}) referenced before emission")
            return idx
        idx = self._map.get(y * (self.n + 1) + z)
        if idx is None:
            raise InternalInvariantError(f"edge ({y},{z}) referenced before emission")
        return idx

    def edge_info(self, idx: int) -> Tuple[int, int, float]:
        return self._ys[idx], self._zs[idx], self._d2[idx]

    def __len__(self) -> int:
        return len(self._ys)


def reduce_and_pair(column: Set[int], tree: Dict[int, Set[int]]) -> Optional[int]:
    """Reduce a column against the store by repeated symmetric difference.

    Returns None when the column vanishes (the 2-simplex gives birth to a
    degree-2 class and nothing is stored); otherwise inserts the reduced
    column and returns its lowest-1 row index, which identifies the
    1-simplex whose class just died.
    """
    low = max(column)
    other = tree.get(low)
    while other is not None:
        column ^= other
        if not column:
            return None
        low = max(column)
        other = tree.get(low)
    tree[low] = column
    return low


@dataclass
class ReductionState:
    """Mutable state threaded through per-edge processing."""

    cloud: PointCloud
    index: SpatialIndex
    registry: EdgeIndexRegistry
    tree: Dict[int, Set[int]] = field(default_factory=dict)
    intervals: List[BarcodeInterval] = field(default_factory=list)
    total_bars: int = 0
    death_count: int = 0
    edges_processed: int = 0
    triangles_created: int = 0
    rule: str = "min"
    small_lune: int = SMALL_LUNE

    @property
    def done(self) -> bool:
        return self.death_count >= self.total_bars


def _record_death(state: ReductionState, low: int, death_d2: float, tri_labels) -> None:
    state.death_count += 1
    by, bz, bd2 = state.registry.edge_info(low)
    if bd2 < death_d2:
        state.intervals.append(
            BarcodeInterval(
                birth=math.sqrt(bd2),
                death=math.sqrt(death_d2),
                birth_simplex=SimplexKey((by, bz), bd2),
                death_simplex=SimplexKey(tuple(sorted(tri_labels)), death_d2),
            )
        )


def _apply_edge(state: ReductionState, d2: float, y: int, z: int, reps) -> None:
    """Assign the edge its index and add one column per representative."""
    registry = state.registry
    idx = registry.assign(y, z, d2)
    state.edges_processed += 1
    if not reps:
        return
    if len(reps) > 1:
        reps = sorted(reps)
    first = True
    for x in reps:
        ixy = registry.index_of(x, y) if x < y else registry.index_of(y, x)
        ixz = registry.index_of(x, z) if x < z else registry.index_of(z, x)
        col = {ixy, ixz, idx}
        state.triangles_created += 1
        if first:
            # lowest 1 is the fresh edge index; nothing can collide
            state.tree[idx] = col
            first = False
            continue
        low = reduce_and_pair(col, state.tree)
        if low is None:
            continue
        _record_death(state, low, d2, (x, y, z))
        if state.done:
            return


def process_edge(edge: SimplexKey, state: ReductionState) -> None:
    """Process one streamed edge through lune analysis and reduction."""
    y, z = edge.vertex_labels
    reps = resolve_edge(
        y, z, edge.diameter_sq, state.cloud, state.index,
        rule=state.rule, small_lune=state.small_lune,
    )
    _apply_edge(state, edge.diameter_sq, y, z, reps)


def _segmented_rule_pick(labels, passing, lengths, rule: str) -> np.ndarray:
    """Per-segment min (or max) label among passing entries; -1 if none.

    Segments partition `labels` consecutively by `lengths`; zero-length
    segments are allowed and always yield -1.
    """
    out = np.full(len(lengths), -1, dtype=np.int64)
    ne = lengths > 0
    if not ne.any():
        return out
    starts = (np.cumsum(lengths) - lengths)[ne]
    if rule == "min":
        big = np.iinfo(np.int64).max
        vals = np.where(passing, labels, big)
        red = np.minimum.reduceat(vals, starts)
        red[red == big] = -1
    else:
        vals = np.where(passing, labels, -1)
        red = np.maximum.reduceat(vals, starts)
    out[ne] = red
    return out


class _ChunkResolver:
    """Batched per-edge lune resolution for the main loop.

    Applies the same three stages as `lunes.resolve_edge`: the small
    midpoint-ball pretest, the lens scan (run inside the diametral ball,
    which contains every point subtending an obtuse angle and hence every
    lens point), and finally full lune enumeration with component
    analysis. Outcomes are identical to the reference edge for edge.
    """

    def __init__(self, cloud: PointCloud, index: SpatialIndex, rule: str, small_lune: int):
        self.cloud = cloud
        self.index = index
        self.rule = rule
        self.small_lune = small_lune
        self._pair_cache = {}

    def _pair_indices(self, m: int):
        cached = self._pair_cache.get(m)
        if cached is None:
            cached = np.triu_indices(m, k=1)
            self._pair_cache[m] = cached
        return cached

    def _batch_components(self, multi, outcomes):
        """Component representatives for many small lunes in one pass.

        `multi` holds (chunk position, member labels, y, z, t) records.
        All member pairs across all records are tested against the order
        predicate in one vectorised sweep; a single union-find then
        assembles the per-record components.
        """
        sizes = np.fromiter((len(r[1]) for r in multi), dtype=np.intp, count=len(multi))
        offsets = np.cumsum(sizes) - sizes
        flat_mem = np.concatenate([r[1] for r in multi])
        pii, pjj, pee = [], [], []
        for rec, (off, size) in enumerate(zip(offsets, sizes)):
            ii, jj = self._pair_indices(int(size))
            pii.append(ii + off)
            pjj.append(jj + off)
            pee.append(np.full(len(ii), rec, dtype=np.intp))
        PI = np.concatenate(pii)
        PJ = np.concatenate(pjj)
        PE = np.concatenate(pee)
        A = flat_mem[PI]
        B = flat_mem[PJ]
        pts = self.cloud.points
        d = pts[A - 1] - pts[B - 1]
        d2 = (d * d).sum(axis=1)
        eys = np.fromiter((r[2] for r in multi), dtype=np.intp, count=len(multi))[PE]
        ezs = np.fromiter((r[3] for r in multi), dtype=np.intp, count=len(multi))[PE]
        ets = np.fromiter((r[4] for r in multi), dtype=np.float64, count=len(multi))[PE]
        p0 = np.minimum(A, B)
        p1 = np.maximum(A, B)
        lex = (p0 < eys) | ((p0 == eys) & (p1 < ezs))
        adj = (d2 < ets) | ((d2 == ets) & lex)

        # Min-label propagation along the adjacent pairs: owners decrease
        # monotonically, so an unchanged sum is the fixpoint.
        api = PI[adj]
        apj = PJ[adj]
        owner = flat_mem.astype(np.int64)
        total = int(owner.sum())
        while True:
            both = np.minimum(owner[api], owner[apj])
            np.minimum.at(owner, api, both)
            np.minimum.at(owner, apj, both)
            new_total = int(owner.sum())
            if new_total == total:
                break
            total = new_total

        # Group (record, owner) pairs; owners are the min labels, so the
        # sorted unique composites directly list each record's components.
        n1 = self.cloud.n + 1
        rec_ids = np.repeat(np.arange(len(multi), dtype=np.int64), sizes)
        composite = rec_ids * n1 + owner
        if self.rule == "min":
            uniq = np.unique(composite)
            reps_arr = uniq % n1
        else:
            uniq, inverse = np.unique(composite, return_inverse=True)
            reps_arr = np.full(len(uniq), -1, dtype=np.int64)
            np.maximum.at(reps_arr, inverse, flat_mem)
        rec_of = uniq // n1
        cut = np.searchsorted(rec_of, np.arange(len(multi) + 1, dtype=np.int64))
        reps_list = reps_arr.tolist()
        bound = component_bound(self.cloud.dim)
        for rec, (pos, seg, y, z, t) in enumerate(multi):
            s, e = cut[rec], cut[rec + 1]
            if e - s > bound:
                raise InternalInvariantError(
                    f"lune of ({y},{z}) has {e - s} components, "
                    f"exceeding the bound for R^{self.cloud.dim}"
                )
            reps = reps_list[s:e]
            if self.rule == "max":
                reps.sort()
            outcomes[pos] = tuple(reps)

    def _lens_pick(self, sub_idx, mids, radii, ys, zs, ts, outcomes, resolved):
        """Enumerate balls for the given edges and pick lens witnesses."""
        if len(sub_idx) == 0:
            return
        lists = self.index.tree.query_ball_point(mids[sub_idx], radii[sub_idx])
        labels, lengths = concat_ball_lists(lists)
        if len(labels) == 0:
            return
        pts = self.cloud.points
        ey = np.repeat(ys[sub_idx], lengths)
        ez = np.repeat(zs[sub_idx], lengths)
        et = np.repeat(ts[sub_idx], lengths)
        P = pts[labels - 1]
        dy = P - pts[ey - 1]
        d2y = (dy * dy).sum(axis=1)
        dz = P - pts[ez - 1]
        d2z = (dz * dz).sum(axis=1)
        L = d2y + d2z - et
        passing = (L < 0) & (L * L > 3.0 * d2y * d2z)
        picks = _segmented_rule_pick(labels.astype(np.int64), passing, lengths, self.rule)
        found = picks >= 0
        for pos, w in zip(sub_idx[found], picks[found]):
            outcomes[pos] = (int(w),)
        resolved[sub_idx[found]] = True

    def resolve(self, chunk) -> list:
        m = len(chunk)
        raw = np.asarray(chunk, dtype=np.float64)
        ts = raw[:, 0]
        ys = raw[:, 1].astype(np.intp)
        zs = raw[:, 2].astype(np.intp)
        pts = self.cloud.points
        mids = (pts[ys - 1] + pts[zs - 1]) * 0.5
        tree = self.index.tree
        slack = 1.0 + RADIUS_SLACK
        outcomes: list = [None] * m
        resolved = np.zeros(m, dtype=bool)

        # Stage 1: pretest ball (never contains the endpoints)
        r_pre = np.sqrt(PRETEST_FACTOR_SQ * ts) * slack
        counts = tree.query_ball_point(mids, r_pre, return_length=True)
        self._lens_pick(
            np.flatnonzero(counts > 0), mids, r_pre, ys, zs, ts, outcomes, resolved
        )

        # Stage 2: lens scan inside the diametral ball
        un = np.flatnonzero(~resolved)
        if len(un):
            r_mid = np.sqrt(DIAMETRAL_FACTOR_SQ * ts) * slack
            counts = tree.query_ball_point(mids[un], r_mid[un], return_length=True)
            self._lens_pick(
                un[counts > 2], mids, r_mid, ys, zs, ts, outcomes, resolved
            )

        # Stage 3: full lune, then components
        un = np.flatnonzero(~resolved)
        if len(un) == 0:
            return outcomes
        r_full = np.sqrt(LUNE_BALL_FACTOR_SQ * ts) * slack
        counts = tree.query_ball_point(mids[un], r_full[un], return_length=True)
        empty = counts <= 2
        for i in un[empty]:
            outcomes[i] = ()
        hard = un[~empty]
        if len(hard) == 0:
            return outcomes
        lists = tree.query_ball_point(mids[hard], r_full[hard])
        labels, lengths = concat_ball_lists(lists)
        mask, _, _ = _member_mask_flat(
            labels,
            np.repeat(ys[hard], lengths),
            np.repeat(zs[hard], lengths),
            np.repeat(ts[hard], lengths),
            self.cloud,
        )
        bounds = np.cumsum(lengths)
        cloud, rule, small_lune = self.cloud, self.rule, self.small_lune
        start = 0
        multi = []
        for which, pos in enumerate(hard):
            end = int(bounds[which])
            members = labels[start:end][mask[start:end]]
            start = end
            count = len(members)
            if count == 0:
                outcomes[pos] = ()
            elif count == 1:
                outcomes[pos] = (int(members[0]),)
            elif count <= small_lune:
                multi.append((pos, members, int(ys[pos]), int(zs[pos]), float(ts[pos])))
            else:
                _, reps = _component_reps(
                    np.sort(members), int(ys[pos]), int(zs[pos]), float(ts[pos]),
                    cloud, rule, small_lune,
                )
                outcomes[pos] = tuple(sorted(reps))
        if multi:
            self._batch_components(multi, outcomes)
        return outcomes


def _current_rss_mb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def compute_ph1(
    cloud: PointCloud,
    k: Optional[int] = None,
    *,
    rule: str = "min",
    small_lune: int = SMALL_LUNE,
    chunk_size: int = _CHUNK_EDGES,
    mem_limit_mb: Optional[float] = None,
) -> Barcode:
    """Degree-1 persistence barcode of a Euclidean point cloud.

    Streams 1-simplices in filtration order and maintains only the
    reduced columns needed for degree-1 pairing; iteration stops as soon
    as every non-apparent death has been found (the RNG edge count minus
    the spanning-tree edge count). `rule` selects which point represents
    each lune component ('min' or 'max' label); the barcode does not
    depend on this choice.
    """
    t0 = time.perf_counter()
    if rule not in ("min", "max"):
        raise ValueError("rule must be 'min' or 'max'")
    if cloud.n < 2:
        raise DegenerateInputError("persistence needs at least two points")
    if mem_limit_mb is None:
        env = os.environ.get(MEM_LIMIT_ENV)
        mem_limit_mb = float(env) if env else None

    index = build_index(cloud)
    rng_count = len(_rng_pairs(cloud, index))
    total = rng_count - mst_edge_count(cloud.n)
    stats = RunStats(
        n_points=cloud.n, dim=cloud.dim, k=k, rng_edges=rng_count, total_bars=total
    )
    if total == 0:
        stats.wall_time = time.perf_counter() - t0
        return Barcode(intervals=[], stats=stats)

    stream = init_stream(cloud, index, k)
    stats.k = stream.k
    registry = EdgeIndexRegistry(cloud.n)
    resolver = _ChunkResolver(cloud, index, rule, small_lune)
    tree: Dict[int, Set[int]] = {}
    intervals: List[BarcodeInterval] = []
    death_count = 0
    edges_processed = 0
    triangles_created = 0
    done = False

    while not done:
        chunk = stream.pop_chunk(chunk_size)
        if not chunk:
            raise InternalInvariantError(
                f"edge stream exhausted with {death_count} of {total} deaths found"
            )
        outcomes = resolver.resolve(chunk)
        registry_assign = registry.assign
        registry_index = registry.index_of
        tree_get = tree.get
        for (d2, y, z), reps in zip(chunk, outcomes):
            idx = registry_assign(y, z, d2)
            edges_processed += 1
            if not reps:
                continue
            if len(reps) == 1:
                x = reps[0]
                ixy = registry_index(x, y) if x < y else registry_index(y, x)
                ixz = registry_index(x, z) if x < z else registry_index(z, x)
                tree[idx] = {ixy, ixz, idx}
                triangles_created += 1
                continue
            first = True
            for x in sorted(reps):
                ixy = registry_index(x, y) if x < y else registry_index(y, x)
                ixz = registry_index(x, z) if x < z else registry_index(z, x)
                col = {ixy, ixz, idx}
                triangles_created += 1
                if first:
                    tree[idx] = col
                    first = False
                    continue
                low = max(col)
                other = tree_get(low)
                while other is not None:
                    col ^= other
                    if not col:
                        low = -1
                        break
                    low = max(col)
                    other = tree_get(low)
                if low < 0:
                    continue
                tree[low] = col
                death_count += 1
                by, bz, bd2 = registry.edge_info(low)
                if bd2 < d2:
                    intervals.append(
                        BarcodeInterval(
                            birth=math.sqrt(bd2),
                            death=math.sqrt(d2),
                            birth_simplex=SimplexKey((by, bz), bd2),
                            death_simplex=SimplexKey(tuple(sorted((x, y, z))), d2),
                        )
                    )
                if death_count == total:
                    done = True
                    break
            if done:
                break
        if mem_limit_mb is not None and _current_rss_mb() > mem_limit_mb:
            raise ResourceLimitError(
                f"peak memory {_current_rss_mb():.0f} MB exceeds limit {mem_limit_mb:.0f} MB"
            )

    stats.death_count = death_count
    stats.edges_processed = edges_processed
    stats.triangles_created = triangles_created
    stats.wall_time = time.perf_counter() - t0
    return Barcode(intervals=intervals, stats=stats)
