"""Time the hash-grid radius counts against scipy's cKDTree.

    python3 scripts/bench_neighbors.py [--sizes 10000 50000 200000] [--radius 1.0]

Counts are checked for equality on every run.
"""

import argparse
import time

import numpy as np
from scipy.spatial import cKDTree

from skytrail.geometry import GridIndex


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10_000, 50_000, 200_000])
    ap.add_argument("--radius", type=float, default=1.0)
    ap.add_argument("--extent", type=float, default=40.0, help="cube side of the random cloud in m")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    print(f"{'points':>9}{'grid s':>9}{'kdtree s':>10}{'mean nbrs':>11}  equal")
    for n in args.sizes:
        xyz = rng.uniform(0, args.extent, (n, 3))
        grid, tg = timed(lambda: GridIndex(xyz, args.radius).neighbor_counts(args.threads))
        tree = cKDTree(xyz)
        # cKDTree compares with <= r, the same closed ball; subtract the point itself
        ref, tk = timed(lambda: tree.query_ball_point(xyz, args.radius, return_length=True) - 1)
        print(f"{n:>9}{tg:>9.3f}{tk:>10.3f}{grid.mean():>11.2f}  {np.array_equal(grid, ref)}")


if __name__ == "__main__":
    main()
