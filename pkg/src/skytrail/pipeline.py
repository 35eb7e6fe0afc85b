"""End-to-end detection: denoise -> cluster -> score -> select -> fit."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cluster import Cluster, dbscan, extract_global_clusters
from .config import PipelineConfig
from .denoise import denoise_sequence
from .geometry import PointCloud
from .ingest import SequenceCloud
from .score import Exclusion, ScoreBreakdown, score_clusters, select_uav_cluster
from .trajectory import Trajectory, interpolate, prefilter


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


@dataclass
class Detection:
    config: PipelineConfig
    n_frames: int
    input_points: int
    removed_noise: int = 0
    points: PointCloud | None = None  # denoised cloud; cluster indices refer to it
    labels: np.ndarray | None = None
    clusters: list[Cluster] = field(default_factory=list)
    breakdowns: list[ScoreBreakdown | Exclusion] = field(default_factory=list)
    selected: int | None = None
    trajectory: Trajectory | None = None
    timings: dict[str, float] = field(default_factory=dict)

    def selected_cluster(self) -> Cluster | None:
        for c in self.clusters:
            if c.id == self.selected:
                return c
        return None

    def report(self, include_timings: bool = True) -> dict:
        out = {
            "config": self.config.to_dict(),
            "n_frames": self.n_frames,
            "input_points": self.input_points,
            "removed_noise": self.removed_noise,
            "cluster_count": len(self.clusters),
            "clusters": [cluster_summary(c) for c in self.clusters],
            "breakdowns": [b.to_dict() for b in self.breakdowns],
            "selected_cluster": self.selected,
        }
        if self.trajectory is not None:
            det = self.trajectory.detected
            out["samples"] = int(len(det))
            out["detected_samples"] = int(det.sum())
        if include_timings:
            out["timings"] = dict(self.timings)
        return out


def cluster_summary(c: Cluster) -> dict:
    return {
        "id": c.id,
        "num": c.num,
        "voxels": c.stats.voxels.count,
        "volume": c.stats.volume,
        "density": c.stats.density,
    }


class _Stage:
    def __init__(self, det: Detection, name: str):
        self.det, self.name = det, name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.det.timings[self.name] = time.perf_counter() - self.t0
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def analyze(seq: SequenceCloud, cfg: PipelineConfig, threads: int = 1) -> Detection:
    """Denoise, cluster and score; no selection or fitting."""
    det = Detection(cfg, seq.n, len(seq.cloud))
    with _Stage(det, "denoise"):
        clean, det.removed_noise = denoise_sequence(seq, cfg.denoise, threads)
        det.points = clean.cloud
    with _Stage(det, "dbscan"):
        det.labels = dbscan(det.points, cfg.cluster.dbscan, threads)
        det.clusters = extract_global_clusters(det.points, det.labels, cfg.cluster.voxel_resolution)
    with _Stage(det, "score"):
        det.breakdowns = score_clusters(
            det.clusters, det.points, seq.n, cfg.cluster.window_frames, cfg.cluster.voxel_resolution, cfg.score, threads
        )
    return det


def detect(seq: SequenceCloud, cfg: PipelineConfig, query_ts=None, threads: int = 1) -> Detection:
    """Full pipeline.

    Failures surface as ``StageError``; when no cluster is eligible its
    ``cause`` is a ``NoCandidateError``.
    """
    det = analyze(seq, cfg, threads)
    with _Stage(det, "select"):
        det.selected = select_uav_cluster(det.breakdowns)
    with _Stage(det, "fit"):
        cluster = det.selected_cluster()
        ctrl = prefilter(det.points.subset(cluster.point_indices), cfg.trajectory.median_window)
        ts = seq.frame_times if query_ts is None else np.asarray(query_ts, dtype=np.float64)
        det.trajectory = interpolate(ctrl, ts)
    return det
