"""Density-threshold noise rejection on the superimposed sequence."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import GridIndex, PointCloud, Sensor
from .ingest import SequenceCloud


@dataclass(frozen=True)
class DenoiseParams:
    radius: float = 1.0
    min_neighbors: int = 4
    apply_to: frozenset = field(default_factory=lambda: frozenset({Sensor.AVIA}))

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("denoise radius must be positive")
        if self.min_neighbors < 1:
            raise ValueError("min_neighbors must be >= 1")
        object.__setattr__(self, "apply_to", frozenset(Sensor(s) for s in self.apply_to))


def superimpose(seq: SequenceCloud) -> PointCloud:
    """Every frame's points, concatenated in frame order."""
    return seq.cloud


def neighbor_counts(points: PointCloud, radius: float, threads: int = 1) -> np.ndarray:
    return GridIndex(points.xyz, radius).neighbor_counts(threads)


def density_mask(points: PointCloud, params: DenoiseParams, threads: int = 1) -> np.ndarray:
    """Boolean keep-mask over ``points``.

    A point from a sensor in ``params.apply_to`` survives only with at least
    ``min_neighbors`` other points (from any sensor) within ``radius``.
    """
    keep = np.ones(len(points), dtype=bool)
    if len(points) == 0 or not params.apply_to:
        return keep
    eligible = np.isin(points.sensor, [int(s) for s in params.apply_to])
    if not eligible.any():
        return keep
    counts = neighbor_counts(points, params.radius, threads)
    keep[eligible] = counts[eligible] >= params.min_neighbors
    return keep


def density_filter(points: PointCloud, params: DenoiseParams, threads: int = 1) -> tuple[PointCloud, PointCloud]:
    keep = density_mask(points, params, threads)
    return points.subset(keep), points.subset(~keep)


def denoise_sequence(seq: SequenceCloud, params: DenoiseParams, threads: int = 1) -> tuple[SequenceCloud, int]:
    """Drop noise from the sequence itself; returns the cleaned sequence and removed count."""
    keep = density_mask(superimpose(seq), params, threads)
    return SequenceCloud(seq.cloud.subset(keep), seq.frame_times), int((~keep).sum())
