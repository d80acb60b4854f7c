"""Lazy enumeration of 1-simplices in filtration order.

A per-point table holds, for point y, its nearest neighbours of larger
label sorted by (squared distance, label); a min-heap holds one candidate
edge per table row. Popping the heap yields edges in exactly the total
order (the heap tuple (d2, y, z) mirrors its tie-breaking clauses, since
y < z for every stored pair). When a row runs out of stored neighbours it
is extended in one shot with all remaining larger-label distances.

Squared distances stored in the table are computed with the same
elementwise arithmetic as everywhere else in the package, never taken
from the kd-tree's internal results.
"""

import heapq
import math
from typing import List, Optional, Tuple

import numpy as np

from .core import PointCloud, SimplexKey
from .spatial import SpatialIndex

_BRUTE_N = 4096
_CHUNK_ELEMS = 16_000_000


class _Row:
    __slots__ = ("labels", "d2", "exhausted")

    def __init__(self, labels, d2, exhausted):
        self.labels = labels
        self.d2 = d2
        self.exhausted = exhausted


def _select_row(labels: np.ndarray, d2: np.ndarray, want: int) -> Tuple[np.ndarray, np.ndarray]:
    """The `want` smallest (d2, label) entries, exactly ordered."""
    m = len(labels)
    if want < m:
        kth = np.partition(d2, want - 1)[want - 1]
        sel = d2 <= kth
        labels, d2 = labels[sel], d2[sel]
    order = np.lexsort((labels, d2))[:want]
    return labels[order].astype(np.int32), d2[order]


def _full_row(cloud: PointCloud, y: int) -> Tuple[np.ndarray, np.ndarray]:
    """All larger-label neighbours of y, sorted by (d2, label)."""
    pts = cloud.points
    diff = pts[y:] - pts[y - 1]
    d2 = (diff * diff).sum(axis=1)
    labels = np.arange(y + 1, cloud.n + 1, dtype=np.intp)
    order = np.lexsort((labels, d2))
    return labels[order].astype(np.int32), d2[order]


def _build_rows(cloud: PointCloud, index: SpatialIndex, k: int) -> List[Optional[_Row]]:
    """Rows 1..n-1 filled with the k nearest larger-label neighbours."""
    n = cloud.n
    pts = cloud.points
    rows: List[Optional[_Row]] = [None] * (n + 1)

    def brute_fill(y: int):
        diff = pts[y:] - pts[y - 1]
        d2 = (diff * diff).sum(axis=1)
        labels = np.arange(y + 1, n + 1, dtype=np.intp)
        want = min(k, n - y)
        sel_labels, sel_d2 = _select_row(labels, d2, want)
        rows[y] = _Row(sel_labels, sel_d2, want == n - y)

    if n <= _BRUTE_N:
        for y in range(1, n):
            brute_fill(y)
        return rows

    # Large clouds: batched k-NN queries for early rows, direct
    # computation for rows with few larger-label points left.
    brute_from = max(1, n - max(8 * k, n // 8))
    y = 1
    while y < brute_from:
        # inflate the query size so the larger-label filter still leaves
        # k candidates with high probability, sizing by the chunk's last row
        hi = min(brute_from, y + max(64, _CHUNK_ELEMS // max(k, 1)))
        kq = min(n, int(1.5 * k * n / (n - hi + 1)) + 2)
        hi = min(hi, y + max(64, _CHUNK_ELEMS // kq))
        kq = min(n, int(1.5 * k * n / (n - hi + 1)) + 2)
        _, ii = index.tree.query(pts[y - 1 : hi - 1], k=kq)
        ii = np.atleast_2d(ii)
        for row_y in range(y, hi):
            cand = ii[row_y - y] + 1
            cand = cand[cand > row_y]
            want = min(k, n - row_y)
            if len(cand) < want:
                brute_fill(row_y)
                continue
            d2_all = cloud.dist_sq_to(cand, row_y)
            cand_max = float(d2_all.max())
            labels, d2 = _select_row(cand.astype(np.intp), d2_all, want)
            # guard against boundary ties excluded by the truncated query
            kth = float(d2[-1])
            if kth * (1.0 + 1e-12) >= cand_max:
                ball = index.ball_labels(pts[row_y - 1], math.sqrt(kth))
                ball = ball[ball > row_y]
                d2b = cloud.dist_sq_to(ball, row_y)
                keep = d2b <= kth
                labels, d2 = _select_row(ball[keep], d2b[keep], want)
            rows[row_y] = _Row(labels, d2, want == n - row_y)
        y = hi
    for row_y in range(brute_from, n):
        brute_fill(row_y)
    return rows


class EdgeStream:
    """Single-owner stream of 1-simplices in filtration order."""

    def __init__(self, cloud: PointCloud, index: SpatialIndex, k: Optional[int] = None):
        if cloud.n < 2:
            raise ValueError("need at least two points to enumerate edges")
        if k is None:
            k = max(1, math.isqrt(cloud.n))
        if k < 1:
            raise ValueError("k must be at least 1")
        self.cloud = cloud
        self.k = k
        self.rows = _build_rows(cloud, index, k)
        self.heap = []
        for y in range(1, cloud.n):
            row = self.rows[y]
            self.heap.append((float(row.d2[0]), y, int(row.labels[0]), 0))
        heapq.heapify(self.heap)
        self.emitted = 0

    def _advance(self, y: int, t: int):
        """Push row y's next candidate after position t, extending if needed."""
        row = self.rows[y]
        nxt = t + 1
        if nxt >= len(row.labels) and not row.exhausted:
            labels, d2 = _full_row(self.cloud, y)
            row.labels, row.d2, row.exhausted = labels, d2, True
        if nxt < len(row.labels):
            heapq.heappush(self.heap, (float(row.d2[nxt]), y, int(row.labels[nxt]), nxt))

    def pop_raw(self) -> Optional[Tuple[float, int, int]]:
        """Next edge as (squared length, smaller label, larger label)."""
        if not self.heap:
            return None
        d2, y, z, t = heapq.heappop(self.heap)
        self._advance(y, t)
        self.emitted += 1
        return d2, y, z

    def pop_chunk(self, max_edges: int) -> list:
        """Up to max_edges next edges; shorter only at exhaustion."""
        out = []
        heap = self.heap
        pop = heapq.heappop
        advance = self._advance
        while heap and len(out) < max_edges:
            d2, y, z, t = pop(heap)
            advance(y, t)
            out.append((d2, y, z))
        self.emitted += len(out)
        return out

    def next_edge(self) -> SimplexKey:
        """Next 1-simplex in the total order; raises StopIteration at the end."""
        raw = self.pop_raw()
        if raw is None:
            raise StopIteration
        d2, y, z = raw
        return SimplexKey((y, z), d2)

    def __iter__(self):
        return self

    def __next__(self) -> SimplexKey:
        return self.next_edge()


def init_stream(cloud: PointCloud, index: SpatialIndex, k: Optional[int] = None) -> EdgeStream:
    """Build the neighbour table and seed the heap with one edge per row."""
    return EdgeStream(cloud, index, k)
