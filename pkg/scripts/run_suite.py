"""Run the pipeline on every standard-suite scene and print a results table.

    python3 scripts/run_suite.py [--threads N] [--json results.json]
"""

import argparse
import json
import time

from skytrail.config import PipelineConfig
from skytrail.evaluation import evaluate
from skytrail.pipeline import detect
from skytrail.synth import generate, path_distance, standard_suite


def run_scene(spec, cfg, threads):
    scene = generate(spec)
    t0 = time.perf_counter()
    det = detect(scene.sequence, cfg, scene.gt.t, threads=threads)
    elapsed = time.perf_counter() - t0
    pts = det.points.subset(det.selected_cluster().point_indices)
    rep = evaluate(det.trajectory, scene.gt)
    return {
        "scene": spec.name,
        "points": len(scene.sequence.cloud),
        "frames": scene.sequence.n,
        "clusters": len(det.clusters),
        "selected_points": len(pts),
        "near_1m": float((path_distance(scene, pts.xyz, pts.t) <= 1.0).mean()),
        "sda": rep.sda,
        "mse": rep.mse,
        "seconds": elapsed,
        "timings": det.timings,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--config", help="pipeline config JSON")
    ap.add_argument("--json", help="write raw results here")
    args = ap.parse_args()
    cfg = PipelineConfig.load(args.config)

    rows = [run_scene(spec, cfg, args.threads) for spec in standard_suite()]
    print(f"{'scene':<14}{'points':>9}{'clusters':>9}{'near1m':>8}{'SDA':>8}{'MSE':>9}{'sec':>7}")
    for r in rows:
        print(f"{r['scene']:<14}{r['points']:>9}{r['clusters']:>9}{r['near_1m']:>8.3f}"
              f"{r['sda']:>8.4f}{r['mse']:>9.4f}{r['seconds']:>7.2f}")
    print(f"total points {sum(r['points'] for r in rows)}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
