"""Seeded synthetic point-cloud generators and point-cloud file I/O.

Generation uses numpy's PCG64 generator, which produces identical streams
for a given seed on every platform, so a (family, n, seed) triple pins a
cloud exactly. Files are written with 17 significant digits, enough for
float64 round trips to be bit-exact.

The solid torus is sampled uniformly in its parameters (radius and two
angles), not uniformly in volume; this parameter bias is intentional
because the benchmark families are defined by their sampling procedure.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import PointCloud
from .errors import InvalidSpecError, ParseError

FAMILIES = ("uniform_square", "annulus", "uniform_cube", "solid_torus")


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    n: int
    seed: int = 0
    side: float = 10.0
    r_in: float = 2.0
    r_out: float = 3.0
    major: float = 3.0
    minor: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpecError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n < 1:
            raise InvalidSpecError("n must be positive")
        if self.side <= 0:
            raise InvalidSpecError("side must be positive")
        if not 0 <= self.r_in < self.r_out:
            raise InvalidSpecError("annulus radii must satisfy 0 <= r_in < r_out")
        if self.minor <= 0 or self.major <= 0:
            raise InvalidSpecError("torus radii must be positive")


def generate(spec: GeneratorSpec) -> PointCloud:
    """Sample a point cloud for the spec, deterministic per seed."""
    rng = np.random.default_rng(np.random.PCG64(spec.seed))
    n = spec.n
    if spec.family == "uniform_square":
        pts = rng.uniform(0.0, spec.side, (n, 2))
    elif spec.family == "uniform_cube":
        pts = rng.uniform(0.0, spec.side, (n, 3))
    elif spec.family == "annulus":
        r = rng.uniform(spec.r_in, spec.r_out, n)
        theta = rng.uniform(0.0, 2.0 * math.pi, n)
        pts = np.column_stack((r * np.cos(theta), r * np.sin(theta)))
    else:  # solid_torus
        r = rng.uniform(0.0, 1.0, n) * spec.minor
        theta = rng.uniform(0.0, 2.0 * math.pi, n)
        phi = rng.uniform(0.0, 2.0 * math.pi, n)
        w = spec.major + r * np.cos(theta)
        pts = np.column_stack((w * np.cos(phi), w * np.sin(phi), r * np.sin(theta)))
    return PointCloud(pts)


def _format_of(path, fmt):
    if fmt is not None:
        if fmt not in ("csv", "xyz"):
            raise ValueError(f"format must be 'csv' or 'xyz', got {fmt!r}")
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix == ".xyz":
        return "xyz"
    raise ValueError(f"cannot infer format from {path!r}; pass fmt='csv' or 'xyz'")


def save_points(cloud: PointCloud, path, fmt: str = None) -> None:
    """Write one point per line, comma- (csv) or whitespace- (xyz) separated."""
    sep = "," if _format_of(path, fmt) == "csv" else " "
    with open(path, "w", encoding="utf-8") as fh:
        for row in cloud.points:
            fh.write(sep.join("%.17g" % c for c in row))
            fh.write("\n")


def load_points(path, fmt: str = None) -> PointCloud:
    """Read a point cloud; every row must carry the same 2 or 3 coordinates."""
    sep = "," if _format_of(path, fmt) == "csv" else None
    rows = []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            fields = text.split(sep)
            try:
                values = [float(f) for f in fields]
            except ValueError:
                raise ParseError(f"non-numeric field in {fields!r}", line=lineno) from None
            if dim is None:
                dim = len(values)
                if dim not in (2, 3):
                    raise ParseError(f"expected 2 or 3 coordinates, got {dim}", line=lineno)
            elif len(values) != dim:
                raise ParseError(
                    f"expected {dim} coordinates, got {len(values)}", line=lineno
                )
            rows.append(values)
    if not rows:
        raise ParseError(f"no points found in {path!r}")
    return PointCloud(np.asarray(rows, dtype=np.float64))
