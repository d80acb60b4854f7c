"""Barcode containers shared by the main engine and the reference oracles."""

import math
from dataclasses import dataclass, field
from typing import List, Optional

from .core import SimplexKey


@dataclass(frozen=True)
class BarcodeInterval:
    """A degree-1 persistence interval [birth, death) with its witnesses.

    Only positive-persistence intervals are ever constructed; the birth
    simplex is a 1-simplex and the death simplex a 2-simplex.
    """

    birth: float
    death: float
    birth_simplex: SimplexKey
    death_simplex: SimplexKey

    def __post_init__(self):
        if not self.birth < self.death:
            raise ValueError(f"interval must have positive persistence: {self.birth} >= {self.death}")

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass
class RunStats:
    """Counters accumulated while producing a barcode."""

    n_points: int = 0
    dim: int = 0
    k: Optional[int] = None
    rng_edges: int = 0
    total_bars: int = 0
    death_count: int = 0
    edges_processed: int = 0
    triangles_created: int = 0
    wall_time: float = 0.0


@dataclass
class Barcode:
    """A multiset of positive-persistence degree-1 intervals."""

    intervals: List[BarcodeInterval] = field(default_factory=list)
    stats: RunStats = field(default_factory=RunStats)

    def endpoints(self):
        """Sorted list of (birth, death) pairs; the multiset identity of the barcode."""
        return sorted((iv.birth, iv.death) for iv in self.intervals)

    def same_as(self, other: "Barcode") -> bool:
        """Multiset equality of intervals under exact float comparison."""
        return self.endpoints() == other.endpoints()

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)


def barcode_summary(barcode: Barcode) -> dict:
    """Counts and statistics for reporting: interval count, max persistence,
    simplex totals, and the 1-simplex : 2-simplex ratio."""
    s = barcode.stats
    max_pers = max((iv.persistence for iv in barcode.intervals), default=0.0)
    ratio = math.nan
    if s.triangles_created:
        ratio = s.edges_processed / s.triangles_created
    return {
        "intervals": len(barcode.intervals),
        "max_persistence": max_pers,
        "edges_processed": s.edges_processed,
        "triangles_created": s.triangles_created,
        "edge_triangle_ratio": ratio,
        "rng_edges": s.rng_edges,
        "total_bars": s.total_bars,
        "death_count": s.death_count,
        "wall_time": s.wall_time,
    }
