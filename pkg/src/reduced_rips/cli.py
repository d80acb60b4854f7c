"""Command-line interface: compute barcodes, generate datasets, verify
against the brute-force oracles, run scaling benchmarks, export graphs.

Exit codes: 0 success, 1 verification failure, 2 parse/usage errors,
3 degenerate input, 4 resource limit exceeded.
"""

import argparse
import math
import resource
import sys
import time

import numpy as np

from . import oracle
from .barcode import Barcode, barcode_summary
from .core import PointCloud
from .datagen import FAMILIES, GeneratorSpec, generate, load_points, save_points
from .errors import (
    DegenerateInputError,
    DuplicatePointError,
    InvalidSpecError,
    ParseError,
    ResourceLimitError,
)
from .graphs import delaunay_edges, gabriel_edges, mst_edges, rng_edges
from .reduction import compute_ph1
from .spatial import build_index

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_DEGENERATE = 3
EXIT_RESOURCE = 4

# k values used for the published scaling experiments, by family and n.
K_SCHEDULE = {
    "uniform_square": {1000: 100, 10000: 100, 50000: 100, 100000: 100,
                       250000: 100, 500000: 100, 1000000: 300},
    "annulus": {1000: 100, 2500: 100, 5000: 200, 10000: 1000},
    "uniform_cube": {1000: 100, 10000: 100, 50000: 100, 100000: 300,
                     250000: 1000, 500000: 1000, 1000000: 1000},
    "solid_torus": {1000: 100, 2500: 500, 5000: 1000, 10000: 1000},
}


def schedule_k(family: str, n: int, mode: str = "auto") -> int:
    """k for a benchmark run: the published table when it applies, else isqrt(n)."""
    if mode == "sqrt":
        return max(1, math.isqrt(n))
    table = K_SCHEDULE.get(family, {})
    return table.get(n, max(1, math.isqrt(n)))


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _simplex_str(labels) -> str:
    return "-".join(str(v) for v in labels)


def write_barcode_csv(barcode: Barcode, fh) -> None:
    fh.write("birth,death,birth_edge,death_triangle\n")
    for iv in barcode.intervals:
        fh.write(
            "%.17g,%.17g,%s,%s\n"
            % (
                iv.birth,
                iv.death,
                _simplex_str(iv.birth_simplex.vertex_labels),
                _simplex_str(iv.death_simplex.vertex_labels),
            )
        )


def _print_summary(barcode: Barcode, out=sys.stdout) -> None:
    s = barcode_summary(barcode)
    peak_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
    out.write(f"intervals: {s['intervals']}\n")
    out.write(f"max_persistence: {s['max_persistence']:.17g}\n")
    out.write(f"edges_processed: {s['edges_processed']}\n")
    out.write(f"triangles_created: {s['triangles_created']}\n")
    out.write(f"rng_edges: {s['rng_edges']}\n")
    out.write(f"total_bars: {s['total_bars']}\n")
    out.write(f"death_count: {s['death_count']}\n")
    out.write(f"wall_time_s: {s['wall_time']:.3f}\n")
    out.write(f"peak_memory_mb: {peak_mb:.1f}\n")


def cmd_compute(args) -> int:
    try:
        cloud = load_points(args.input,
                            fmt=None if args.format == "auto" else args.format)
    except FileNotFoundError:
        print(f"error: no such file: {args.input}", file=sys.stderr)
        return EXIT_PARSE
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DuplicatePointError, DegenerateInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    if args.dim is not None and cloud.dim != args.dim:
        print(f"error: file holds {cloud.dim}-dimensional points, expected {args.dim}",
              file=sys.stderr)
        return EXIT_PARSE
    try:
        barcode = compute_ph1(cloud, k=args.k, rule=args.rule)
    except DegenerateInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ResourceLimitError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_barcode_csv(barcode, fh)
    else:
        write_barcode_csv(barcode, sys.stdout)
    if args.summary:
        _print_summary(barcode)
    return EXIT_OK


def cmd_generate(args) -> int:
    try:
        spec = GeneratorSpec(
            family=args.family, n=args.n, seed=args.seed, side=args.side,
            r_in=args.r_in, r_out=args.r_out, major=args.major, minor=args.minor,
        )
        cloud = generate(spec)
    except InvalidSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    save_points(cloud, args.out)
    print(f"wrote {cloud.n} points ({cloud.dim}D) to {args.out}")
    return EXIT_OK


def _verify_cloud(rng: np.random.Generator, n_max: int) -> PointCloud:
    """A random test cloud: one of the synthetic families or uniform noise."""
    n = int(rng.integers(8, n_max + 1))
    kind = int(rng.integers(0, 6))
    seed = int(rng.integers(0, 2**31))
    if kind < 4:
        return generate(GeneratorSpec(family=FAMILIES[kind], n=n, seed=seed))
    dim = 2 if kind == 4 else 3
    noise = np.random.default_rng(seed).uniform(0.0, 1.0, (n, dim))
    return PointCloud(noise)


def cmd_verify(args) -> int:
    n_max = args.n_max
    if n_max > oracle.DEFAULT_CAP:
        print(
            f"warning: n-max {n_max} exceeds the oracle cap "
            f"{oracle.DEFAULT_CAP}; clamping",
            file=sys.stderr,
        )
        n_max = oracle.DEFAULT_CAP
    rng = np.random.default_rng(args.seed)
    failures = 0
    for trial in range(args.trials):
        cloud = _verify_cloud(rng, n_max)
        expected = oracle.brute_force_vr_ph1(cloud).endpoints()
        results = {
            "engine/min": compute_ph1(cloud, rule="min").endpoints(),
            "engine/max": compute_ph1(cloud, rule="max").endpoints(),
            "reduced/min": oracle.brute_force_reduced_ph1(cloud, "min").endpoints(),
            "reduced/max": oracle.brute_force_reduced_ph1(cloud, "max").endpoints(),
        }
        bad = [name for name, got in results.items() if got != expected]
        status = "PASS" if not bad else f"FAIL ({', '.join(bad)})"
        print(f"trial {trial + 1:3d}  n={cloud.n:3d} dim={cloud.dim}  "
              f"bars={len(expected):3d}  {status}")
        if bad:
            failures += 1
    print(f"{args.trials - failures}/{args.trials} trials passed")
    return EXIT_OK if failures == 0 else EXIT_FAIL


def _parse_sizes(text: str):
    sizes = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        sizes.append(int(float(part)))
    if not sizes:
        raise argparse.ArgumentTypeError("no sizes given")
    return sizes


def run_bench(family: str, sizes, seeds: int = 3, k_mode: str = "auto", out=None):
    """Time compute_ph1 over the size grid; returns (rows, slope).

    Each row is (n, seed, k, wall_time, edges, triangles, ratio,
    intervals). The slope is the degree-1 coefficient of a log-log fit of
    wall time against n over all runs, or None for a single size.
    """
    rows = []
    for n in sizes:
        k = schedule_k(family, n, k_mode)
        for seed in range(seeds):
            cloud = generate(GeneratorSpec(family=family, n=n, seed=seed))
            t0 = time.perf_counter()
            barcode = compute_ph1(cloud, k=k)
            wall = time.perf_counter() - t0
            s = barcode.stats
            ratio = s.edges_processed / s.triangles_created if s.triangles_created else math.nan
            rows.append((n, seed, k, wall, s.edges_processed, s.triangles_created,
                         ratio, len(barcode)))
    slope = None
    if len(set(sizes)) > 1:
        logs_n = np.log10([r[0] for r in rows])
        logs_t = np.log10([max(r[3], 1e-9) for r in rows])
        slope = float(np.polyfit(logs_n, logs_t, 1)[0])
    if out is not None:
        out.write("n,seed,k,wall_time,one_simplices,two_simplices,ratio,intervals\n")
        for r in rows:
            out.write("%d,%d,%d,%.6f,%d,%d,%.6f,%d\n" % r)
    return rows, slope


def cmd_bench(args) -> int:
    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                rows, slope = run_bench(args.family, args.sizes, args.seeds,
                                        args.k_schedule, out=fh)
        else:
            rows, slope = run_bench(args.family, args.sizes, args.seeds,
                                    args.k_schedule, out=sys.stdout)
    except InvalidSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if slope is not None:
        print(f"log-log slope: {slope:.3f}")
    return EXIT_OK


def cmd_edges(args) -> int:
    try:
        cloud = load_points(args.input,
                            fmt=None if args.format == "auto" else args.format)
    except FileNotFoundError:
        print(f"error: no such file: {args.input}", file=sys.stderr)
        return EXIT_PARSE
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DuplicatePointError, DegenerateInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    index = build_index(cloud)
    builders = {
        "delaunay": lambda: delaunay_edges(cloud),
        "gabriel": lambda: gabriel_edges(cloud, index),
        "rng": lambda: rng_edges(cloud, index),
        "mst": lambda: mst_edges(cloud, index),
    }
    edges = sorted(builders[args.graph](),
                   key=lambda e: (e.diameter_sq, e.vertex_labels))
    fh = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        fh.write("label_a,label_b,distance\n")
        for e in edges:
            a, b = e.vertex_labels
            fh.write("%d,%d,%.17g\n" % (a, b, math.sqrt(e.diameter_sq)))
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reduced-rips",
        description="Degree-1 Vietoris-Rips persistence for point clouds in R^2 and R^3.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="compute the degree-1 barcode of a point file")
    p.add_argument("input", help="point cloud file (.csv or .xyz)")
    p.add_argument("--k", type=_positive_int, default=None,
                   help="neighbour table width (default: isqrt(n))")
    p.add_argument("--dim", type=int, choices=(2, 3), default=None,
                   help="require this point dimension")
    p.add_argument("--out", default=None, help="barcode CSV path (default: stdout)")
    p.add_argument("--summary", action="store_true", help="print run statistics")
    p.add_argument("--rule", choices=("min", "max"), default="min",
                   help="lune representative selection rule")
    p.add_argument("--format", choices=("auto", "csv", "xyz"), default="auto")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("generate", help="write a synthetic point cloud")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--side", type=float, default=10.0)
    p.add_argument("--r-in", type=float, default=2.0)
    p.add_argument("--r-out", type=float, default=3.0)
    p.add_argument("--major", type=float, default=3.0)
    p.add_argument("--minor", type=float, default=1.0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="compare the engine against brute-force oracles")
    p.add_argument("--n-max", type=_positive_int, default=32)
    p.add_argument("--trials", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time the engine over a size grid")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--sizes", type=_parse_sizes, required=True,
                   help="comma-separated sizes, e.g. 1e3,1e4,1e5")
    p.add_argument("--seeds", type=_positive_int, default=3)
    p.add_argument("--k-schedule", choices=("auto", "sqrt"), default="auto")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("edges", help="export a proximity graph as CSV")
    p.add_argument("input")
    p.add_argument("--graph", choices=("delaunay", "gabriel", "rng", "mst"),
                   required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("auto", "csv", "xyz"), default="auto")
    p.set_defaults(func=cmd_edges)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
