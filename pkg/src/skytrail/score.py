"""Density-consistency and voxel-overlap scores per global cluster.

Movers keep roughly the same local density as their global density (relative
density near 1) and sweep new voxels from window to window (low IoU).
Stationary surfaces accumulate points, so their windows are sparse relative
to the whole sequence and overlap heavily.  The score rewards the former:

    total = mean(exp(R)) + lambda * mean(ln(1 / max(IoU, iou_floor)))

With ``normalize=False`` the means become plain sums.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .cluster import Cluster, WindowSlice, slice_windows
from .geometry import PointCloud, voxel_iou


class NoCandidateError(RuntimeError):
    """No cluster has enough temporal support to be scored."""

    def __init__(self, msg: str = "no candidate trajectory"):
        super().__init__(msg)


@dataclass(frozen=True)
class ScoringConfig:
    lam: float = 1.0
    iou_floor: float = 1e-3
    min_active_windows: int = 3
    normalize: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if not 0 < self.iou_floor <= 1:
            raise ValueError("iou_floor must lie in (0, 1]")
        if self.min_active_windows < 2:
            raise ValueError("min_active_windows must be >= 2")


@dataclass(frozen=True)
class ScoreBreakdown:
    cluster_id: int
    relative_densities: list[float] = field(repr=False)
    ious: list[float] = field(repr=False)
    score_iou: float
    score_dens: float
    total: float
    active_window_count: int

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "eligible": True,
            "score_iou": self.score_iou,
            "score_dens": self.score_dens,
            "total": self.total,
            "active_window_count": self.active_window_count,
            "relative_densities": self.relative_densities,
            "ious": self.ious,
        }


@dataclass(frozen=True)
class Exclusion:
    cluster_id: int
    reason: str
    active_window_count: int

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "eligible": False,
            "reason": self.reason,
            "active_window_count": self.active_window_count,
        }


def relative_density(cluster: Cluster, window: WindowSlice) -> float:
    if window.empty:
        raise ValueError("empty window")
    return window.stats.density / cluster.stats.density


def iou_chain(slices: list[WindowSlice]) -> list[float]:
    """IoU of occupied voxels between consecutive non-empty slices."""
    active = [s for s in slices if not s.empty]
    if len(active) < 2:
        raise ValueError("insufficient windows")
    return [voxel_iou(a.stats.voxels, b.stats.voxels) for a, b in zip(active, active[1:])]


def iou_term(iou: float, floor: float) -> float:
    return math.log(1.0 / max(iou, floor))


def combine(dens_terms, iou_terms, cfg: ScoringConfig) -> tuple[float, float, float]:
    """(score_dens, score_iou, total) from per-window and per-pair terms."""
    score_dens = math.fsum(dens_terms)
    score_iou = math.fsum(iou_terms)
    if cfg.normalize:
        score_dens /= len(dens_terms)
        score_iou /= len(iou_terms)
    return score_dens, score_iou, score_dens + cfg.lam * score_iou


def score_cluster(cluster: Cluster, slices: list[WindowSlice], cfg: ScoringConfig) -> ScoreBreakdown | Exclusion:
    active = [s for s in slices if not s.empty]
    if len(active) < cfg.min_active_windows:
        return Exclusion(cluster.id, "insufficient temporal support", len(active))
    rel = [relative_density(cluster, s) for s in active]
    ious = iou_chain(active)
    score_dens, score_iou, total = combine(
        [math.exp(r) for r in rel], [iou_term(v, cfg.iou_floor) for v in ious], cfg
    )
    return ScoreBreakdown(cluster.id, rel, ious, score_iou, score_dens, total, len(active))


def score_clusters(
    clusters: list[Cluster],
    points: PointCloud,
    n_frames: int,
    window_frames: int,
    voxel_resolution: float,
    cfg: ScoringConfig,
    threads: int = 1,
) -> list[ScoreBreakdown | Exclusion]:
    """Slice and score every cluster; output order follows ``clusters``."""

    def one(c: Cluster):
        return score_cluster(c, slice_windows(c, points, n_frames, window_frames, voxel_resolution), cfg)

    if threads > 1 and len(clusters) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, clusters))
    return [one(c) for c in clusters]


def select_uav_cluster(breakdowns) -> int:
    """Cluster id with the highest total; ties go to higher score_dens, then lower id."""
    eligible = [b for b in breakdowns if isinstance(b, ScoreBreakdown)]
    if not eligible:
        raise NoCandidateError()
    best = max(eligible, key=lambda b: (b.total, b.score_dens, -b.cluster_id))
    return best.cluster_id
