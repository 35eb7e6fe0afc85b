"""Command line: ``skytrail {detect,synth,eval,inspect}``.

Exit codes: 0 success, 2 no candidate trajectory, 1 any other error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from . import ingest
from .config import ConfigError, PipelineConfig, parse_override
from .evaluation import evaluate, sda
from .pipeline import StageError, analyze, cluster_summary, detect
from .score import NoCandidateError
from .synth import SceneSpec, generate, suite_scene, write_scene

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_DETECTION = 2

log = logging.getLogger("skytrail")


def _dump_json(payload: Any, path: str | Path | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _load_config(args) -> PipelineConfig:
    overrides = dict(parse_override(s) for s in (args.set or []))
    return PipelineConfig.load(args.config, overrides)


def _resolve(flag, from_config, name: str, required: bool = True):
    value = flag if flag is not None else from_config
    if value is None and required:
        raise ConfigError(f"missing {name} (flag or config key)")
    return value


def cmd_detect(args) -> int:
    cfg = _load_config(args)
    seq_path = _resolve(args.input, cfg.input, "input")
    out_path = _resolve(args.out, cfg.output, "output")
    report_path = _resolve(args.report, cfg.report, "report", required=False)
    ts_path = _resolve(args.timestamps, cfg.timestamps, "timestamps", required=False)

    try:
        seq = ingest.load_sequence(seq_path, args.format)
        query_ts = ingest.load_timestamps(ts_path) if ts_path else None
        gt = ingest.load_ground_truth(args.gt) if args.gt else None
    except (OSError, ValueError) as exc:
        raise StageError("load", exc) from exc

    try:
        det = detect(seq, cfg, query_ts, threads=args.threads)
    except StageError as exc:
        if isinstance(exc.cause, NoCandidateError):
            if report_path:
                _dump_json({"config": cfg.to_dict(), "detected": False, "sda": 0.0, "error": str(exc.cause)}, report_path)
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NO_DETECTION
        raise

    try:
        ingest.save_trajectory(det.trajectory, out_path)
    except OSError as exc:
        raise StageError("save", exc) from exc

    report = det.report(include_timings=not args.no_timings)
    report["detected"] = True
    report["sda"] = sda(det.trajectory)
    if gt is not None:
        report["eval"] = evaluate(det.trajectory, gt).to_dict()
    if report_path:
        _dump_json(report, report_path)
    log.info("selected cluster %s, sda %.4f", det.selected, report["sda"])
    return EXIT_OK


def cmd_synth(args) -> int:
    if (args.spec is None) == (args.suite is None):
        raise ConfigError("give exactly one of --spec or --suite")
    spec = SceneSpec.load(args.spec) if args.spec else suite_scene(args.suite)
    if args.seed is not None:
        spec = SceneSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    scene = generate(spec)
    paths = write_scene(scene, args.out, args.format)
    _dump_json({"scene": spec.name, "points": len(scene.sequence.cloud), "frames": scene.sequence.n,
                "counts": scene.counts(), "files": {k: str(v) for k, v in paths.items()}}, None)
    return EXIT_OK


def cmd_eval(args) -> int:
    pred = ingest.load_trajectory(args.pred)
    gt = ingest.load_ground_truth(args.gt)
    report = evaluate(pred, gt)
    if args.json:
        _dump_json(report.to_dict(), args.json)
    print(report.table())
    _dump_json(report.to_dict(), None)
    return EXIT_OK


def cmd_inspect(args) -> int:
    cfg = _load_config(args)
    seq = ingest.load_sequence(_resolve(args.input, cfg.input, "input"), args.format)
    det = analyze(seq, cfg, threads=args.threads)
    payload = {
        "config": cfg.to_dict(),
        "n_frames": det.n_frames,
        "input_points": det.input_points,
        "removed_noise": det.removed_noise,
        "clusters": [cluster_summary(c) for c in det.clusters],
        "breakdowns": [b.to_dict() for b in det.breakdowns],
    }
    if args.export_dir:
        out = Path(args.export_dir)
        out.mkdir(parents=True, exist_ok=True)
        for c in det.clusters:
            pts = det.points.subset(c.point_indices)
            with open(out / f"cluster_{c.id:04d}.csv", "w", encoding="utf-8", newline="\n") as fh:
                fh.write("frame,t,sensor,x,y,z\n")
                for p in pts:
                    fh.write(f"{p.frame_index},{p.t!r},{p.sensor.label},{p.x!r},{p.y!r},{p.z!r}\n")
    _dump_json(payload, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skytrail", description="Unsupervised LiDAR UAV trajectory detection")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def pipeline_flags(p):
        p.add_argument("--input", help="sequence file (.csv or .bin)")
        p.add_argument("--format", choices=["csv", "bin"], default=None, help="override format detection")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override, repeatable")
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("detect", help="run the full pipeline on a sequence")
    pipeline_flags(p)
    p.add_argument("--timestamps", help="CSV whose first column holds query timestamps (a gt file works)")
    p.add_argument("--out", help="trajectory CSV to write")
    p.add_argument("--report", help="JSON run report to write")
    p.add_argument("--gt", help="ground truth CSV; adds MSE/SDA to the report")
    p.add_argument("--no-timings", action="store_true", help="leave stage timings out of the report")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--spec", help="SceneSpec JSON")
    p.add_argument("--suite", help="name of a standard-suite scene")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=["csv", "bin"], default="bin")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score a predicted trajectory against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--json", help="also write the report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="dump clusters and score breakdowns as JSON")
    pipeline_flags(p)
    p.add_argument("--out", help="JSON output (stdout if omitted)")
    p.add_argument("--export-dir", help="write one point CSV per cluster here")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except ConfigError as exc:
        print(f"error: [config] {exc}", file=sys.stderr)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
