"""DBSCAN over the superimposed cloud and time-window slices of its clusters.

Window slices are subsets of a global cluster restricted to a run of frames.
They are never re-clustered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .geometry import GridIndex, PointCloud, VoxelSet, pack_voxels, voxel_coords

NOISE = -1


@dataclass(frozen=True)
class DbscanParams:
    eps: float = 0.8
    min_pts: int = 5

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")


@dataclass(frozen=True)
class ClusterStats:
    num: int
    voxels: VoxelSet

    @property
    def volume(self) -> float:
        return self.voxels.volume

    @property
    def density(self) -> float:
        return self.num / self.voxels.volume


@dataclass(frozen=True, eq=False)
class Cluster:
    id: int
    point_indices: np.ndarray
    stats: ClusterStats

    @property
    def num(self) -> int:
        return self.stats.num


@dataclass(frozen=True, eq=False)
class WindowSlice:
    cluster_id: int
    start_frame: int
    length: int
    point_indices: np.ndarray
    stats: ClusterStats | None  # None marks an empty window

    @property
    def empty(self) -> bool:
        return self.stats is None


def dbscan(points, params: DbscanParams, threads: int = 1) -> np.ndarray:
    """Label every point with a cluster id (0, 1, ...) or ``NOISE``.

    Classical semantics: a point is core when its eps-ball (itself included,
    boundary inclusive) holds at least ``min_pts`` points.  Clusters are
    numbered in input scan order; a border point reachable from several
    clusters takes the lowest id.
    """
    xyz = points.xyz if isinstance(points, PointCloud) else np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = len(xyz)
    labels = np.full(n, NOISE, dtype=np.int64)
    if n == 0:
        return labels
    i, j = GridIndex(xyz, params.eps).pairs(threads)
    counts = np.bincount(i, minlength=n) + np.bincount(j, minlength=n) + 1
    core = counts >= params.min_pts
    if not core.any():
        return labels

    both = core[i] & core[j]
    graph = coo_matrix((np.ones(int(both.sum()), dtype=np.int8), (i[both], j[both])), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    core_idx = np.nonzero(core)[0]
    # renumber components by their first core point in scan order
    comps, first = np.unique(comp[core_idx], return_index=True)
    remap = np.empty(comp.max() + 1, dtype=np.int64)
    remap[comps[np.argsort(first)]] = np.arange(len(comps))
    labels[core_idx] = remap[comp[core_idx]]

    # border points: lowest id among adjacent core points
    m1 = core[i] & ~core[j]
    m2 = core[j] & ~core[i]
    border = np.concatenate([j[m1], i[m2]])
    if border.size:
        via = np.concatenate([labels[i[m1]], labels[j[m2]]])
        best = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
        np.minimum.at(best, border, via)
        hit = np.unique(border)
        labels[hit] = best[hit]
    return labels


def cluster_stats(xyz: np.ndarray, resolution: float) -> ClusterStats:
    keys = pack_voxels(voxel_coords(xyz, resolution))
    if len(keys) == 0:
        raise ValueError("empty cluster")
    return ClusterStats(len(keys), VoxelSet(resolution, keys))


def extract_global_clusters(points: PointCloud, labels: np.ndarray, voxel_resolution: float) -> list[Cluster]:
    labels = np.asarray(labels)
    if len(labels) != len(points):
        raise ValueError("labels do not match points")
    valid = labels != NOISE
    if not valid.any():
        return []
    idx = np.nonzero(valid)[0]
    order = np.argsort(labels[idx], kind="stable")
    idx = idx[order]
    ids, starts = np.unique(labels[idx], return_index=True)
    ends = np.append(starts[1:], len(idx))
    out = []
    for k, a, b in zip(ids, starts, ends):
        members = idx[a:b]
        out.append(Cluster(int(k), members, cluster_stats(points.xyz[members], voxel_resolution)))
    return out


def window_count(n_frames: int, length: int) -> int:
    if length < 1:
        raise ValueError("window length must be >= 1")
    if length > n_frames:
        raise ValueError("window longer than sequence")
    return n_frames - length + 1


def slice_windows(
    cluster: Cluster,
    points: PointCloud,
    n_frames: int,
    length: int,
    voxel_resolution: float,
) -> list[WindowSlice]:
    """One slice per window start ``0 .. n_frames - length``.

    Slice ``s`` holds the cluster's points with frame index in
    ``[s, s + length)``; empty slices carry ``stats=None``.
    """
    count = window_count(n_frames, length)
    members = cluster.point_indices
    frames = points.frame[members]
    order = np.argsort(frames, kind="stable")
    members, frames = members[order], frames[order]
    keys = pack_voxels(voxel_coords(points.xyz[members], voxel_resolution))
    starts = np.arange(count)
    lo = np.searchsorted(frames, starts, side="left")
    hi = np.searchsorted(frames, starts + length, side="left")
    slices = []
    for s, a, b in zip(starts, lo, hi):
        sel = np.sort(members[a:b])
        stats = ClusterStats(int(b - a), VoxelSet(voxel_resolution, keys[a:b])) if b > a else None
        slices.append(WindowSlice(cluster.id, int(s), length, sel, stats))
    return slices
