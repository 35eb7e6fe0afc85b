"""Core 3D primitives: timestamped points, bounds, voxel sets and a hash-grid index."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np


class Sensor(enum.IntEnum):
    AVIA = 0
    MID360 = 1

    @classmethod
    def parse(cls, name: str) -> "Sensor":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown sensor {name!r}") from None

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class TimedPoint:
    x: float
    y: float
    z: float
    t: float
    sensor: Sensor
    frame_index: int

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError("non-finite coordinate")
        if not (math.isfinite(self.t) and self.t >= 0):
            raise ValueError("timestamp must be finite and non-negative")
        if self.frame_index < 0:
            raise ValueError("negative frame index")


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Structure-of-arrays container for timestamped, sensor-tagged points.

    Row ``i`` of every array describes the same point.  Pipelines pass these
    around instead of lists of :class:`TimedPoint` so that neighbor queries and
    voxelization stay vectorized.
    """

    xyz: np.ndarray
    t: np.ndarray
    sensor: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        xyz = np.ascontiguousarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        n = len(xyz)
        t = np.ascontiguousarray(self.t, dtype=np.float64).reshape(n)
        sensor = np.ascontiguousarray(self.sensor, dtype=np.int8).reshape(n)
        frame = np.ascontiguousarray(self.frame, dtype=np.int64).reshape(n)
        for arr in (xyz, t, sensor, frame):
            arr.setflags(write=False)
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "sensor", sensor)
        object.__setattr__(self, "frame", frame)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.empty((0, 3)), np.empty(0), np.empty(0), np.empty(0))

    @classmethod
    def from_points(cls, points: Iterable[TimedPoint]) -> "PointCloud":
        points = list(points)
        if not points:
            return cls.empty()
        return cls(
            xyz=[(p.x, p.y, p.z) for p in points],
            t=[p.t for p in points],
            sensor=[int(p.sensor) for p in points],
            frame=[p.frame_index for p in points],
        )

    @classmethod
    def concat(cls, clouds: Sequence["PointCloud"]) -> "PointCloud":
        if not clouds:
            return cls.empty()
        return cls(
            np.concatenate([c.xyz for c in clouds]),
            np.concatenate([c.t for c in clouds]),
            np.concatenate([c.sensor for c in clouds]),
            np.concatenate([c.frame for c in clouds]),
        )

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> TimedPoint:
        x, y, z = (float(v) for v in self.xyz[i])
        return TimedPoint(x, y, z, float(self.t[i]), Sensor(int(self.sensor[i])), int(self.frame[i]))

    def __iter__(self) -> Iterator[TimedPoint]:
        for i in range(len(self)):
            yield self[i]

    def subset(self, idx) -> "PointCloud":
        return PointCloud(self.xyz[idx], self.t[idx], self.sensor[idx], self.frame[idx])

    def translated(self, offset) -> "PointCloud":
        return PointCloud(self.xyz + np.asarray(offset, dtype=np.float64), self.t, self.sensor, self.frame)

    def equals(self, other: "PointCloud") -> bool:
        """Bitwise equality of every field."""
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in (
                (self.xyz, other.xyz),
                (self.t, other.t),
                (self.sensor, other.sensor),
                (self.frame, other.frame),
            )
        )


@dataclass(frozen=True)
class Aabb:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("min corner exceeds max corner")

    @classmethod
    def of(cls, xyz: np.ndarray) -> "Aabb":
        xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
        if len(xyz) == 0:
            raise ValueError("empty point set has no bounds")
        return cls(tuple(xyz.min(axis=0).tolist()), tuple(xyz.max(axis=0).tolist()))

    @property
    def extent(self) -> tuple[float, float, float]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    def contains(self, p) -> bool:
        return all(a <= v <= b for a, v, b in zip(self.lo, p, self.hi))


# Voxel coordinates are packed into one int64 so set algebra runs on sorted
# integer arrays.  21 bits per axis: |i| < 2**20 voxels.
_BITS = 21
_BIAS = 1 << (_BITS - 1)
_MASK = (1 << _BITS) - 1


def pack_voxels(ijk: np.ndarray) -> np.ndarray:
    ijk = np.asarray(ijk, dtype=np.int64).reshape(-1, 3)
    if ijk.size and (np.abs(ijk).max() >= _BIAS):
        raise ValueError("voxel coordinate out of packable range")
    b = ijk + _BIAS
    return (b[:, 0] << (2 * _BITS)) | (b[:, 1] << _BITS) | b[:, 2]


def unpack_voxels(keys: np.ndarray) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    out = np.empty((len(keys), 3), dtype=np.int64)
    out[:, 0] = (keys >> (2 * _BITS)) & _MASK
    out[:, 1] = (keys >> _BITS) & _MASK
    out[:, 2] = keys & _MASK
    return out - _BIAS


def voxel_coords(xyz: np.ndarray, resolution: float) -> np.ndarray:
    return np.floor(np.asarray(xyz, dtype=np.float64) / resolution).astype(np.int64)


@dataclass(frozen=True, eq=False)
class VoxelSet:
    """Occupied cells of a fixed-resolution grid.

    ``keys`` holds the packed cell coordinates, sorted and unique.
    """

    resolution: float
    keys: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("bad resolution")
        keys = np.unique(np.asarray(self.keys, dtype=np.int64))
        keys.setflags(write=False)
        object.__setattr__(self, "keys", keys)

    @classmethod
    def from_cells(cls, cells: Iterable[tuple[int, int, int]], resolution: float) -> "VoxelSet":
        cells = list(cells)
        return cls(resolution, pack_voxels(np.array(cells, dtype=np.int64).reshape(-1, 3)))

    @property
    def occupied(self) -> frozenset[tuple[int, int, int]]:
        return frozenset(tuple(int(v) for v in row) for row in unpack_voxels(self.keys))

    @property
    def count(self) -> int:
        return len(self.keys)

    @property
    def volume(self) -> float:
        return self.count * self.resolution**3

    def __len__(self) -> int:
        return self.count

    def __eq__(self, other) -> bool:
        if not isinstance(other, VoxelSet):
            return NotImplemented
        return self.resolution == other.resolution and np.array_equal(self.keys, other.keys)

    def __or__(self, other: "VoxelSet") -> "VoxelSet":
        _check_resolution(self, other)
        return VoxelSet(self.resolution, np.union1d(self.keys, other.keys))


def _check_resolution(a: VoxelSet, b: VoxelSet) -> None:
    if a.resolution != b.resolution:
        raise ValueError("resolution mismatch")


def voxelize(points, resolution: float) -> VoxelSet:
    """Voxelize points into the set of distinct cells they touch.

    ``points`` may be a :class:`PointCloud`, a sequence of :class:`TimedPoint`
    or an ``(N, 3)`` array.  Cell ``(i, j, k)`` is
    ``(floor(x/res), floor(y/res), floor(z/res))``.
    """
    if not (resolution > 0):
        raise ValueError("bad resolution")
    xyz = _as_xyz(points)
    if len(xyz) == 0:
        raise ValueError("empty cluster")
    return VoxelSet(resolution, pack_voxels(voxel_coords(xyz, resolution)))


def voxel_iou(a: VoxelSet, b: VoxelSet) -> float:
    _check_resolution(a, b)
    inter = np.intersect1d(a.keys, b.keys, assume_unique=True).size
    union = a.count + b.count - inter
    if union == 0:
        return 0.0
    return inter / union


def _as_xyz(points) -> np.ndarray:
    if isinstance(points, PointCloud):
        return points.xyz
    if isinstance(points, np.ndarray):
        return points.reshape(-1, 3)
    points = list(points)
    if points and isinstance(points[0], TimedPoint):
        return np.array([(p.x, p.y, p.z) for p in points], dtype=np.float64)
    return np.asarray(points, dtype=np.float64).reshape(-1, 3)


def squared_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise squared Euclidean distance.

    Both the grid index and the brute-force checks go through this one
    expression so that boundary ties resolve identically.
    """
    d = a - b
    return d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2]


# 13 forward neighbor offsets plus the home cell: each unordered cell pair is
# visited exactly once.
_HALF_SHELL = [
    (dx, dy, dz)
    for dx in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dz in (-1, 0, 1)
    if (dx, dy, dz) > (0, 0, 0)
]

_CHUNK = 4_000_000


class GridIndex:
    """Uniform hash grid over a static point set for fixed-radius queries.

    The cell size equals the query radius, so every neighbor of a point lies
    in its own cell or one of the 26 surrounding cells.
    """

    def __init__(self, xyz: np.ndarray, radius: float):
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
        self.radius = float(radius)
        self.r2 = self.radius * self.radius
        n = len(self.xyz)
        if n == 0:
            self._order = np.empty(0, dtype=np.int64)
            self._cell_keys = np.empty(0, dtype=np.int64)
            self._starts = np.empty(0, dtype=np.int64)
            self._ends = np.empty(0, dtype=np.int64)
            return
        cells = np.floor(self.xyz / self.radius).astype(np.int64)
        cells -= cells.min(axis=0) - 1
        dims = cells.max(axis=0) + 2
        self._strides = np.array([dims[1] * dims[2], dims[2], 1], dtype=np.int64)
        keys = cells @ self._strides
        self._order = np.argsort(keys, kind="stable")
        sorted_keys = keys[self._order]
        self._cell_keys, self._starts, counts = np.unique(sorted_keys, return_index=True, return_counts=True)
        self._ends = self._starts + counts

    def __len__(self) -> int:
        return len(self.xyz)

    def pairs(self, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """All unordered pairs ``(i, j)``, ``i < j``, with distance <= radius.

        Pairs come out grouped by cell offset in a fixed order, so the result
        does not depend on ``threads``.
        """
        if len(self) < 2:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        jobs = [None] + _HALF_SHELL
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(self._pairs_for_offset, jobs))
        else:
            parts = [self._pairs_for_offset(o) for o in jobs]
        i = np.concatenate([p[0] for p in parts])
        j = np.concatenate([p[1] for p in parts])
        return np.minimum(i, j), np.maximum(i, j)

    def neighbor_counts(self, threads: int = 1) -> np.ndarray:
        """Number of *other* points within radius of each point."""
        i, j = self.pairs(threads)
        n = len(self)
        return np.bincount(i, minlength=n) + np.bincount(j, minlength=n)

    def _pairs_for_offset(self, offset) -> tuple[np.ndarray, np.ndarray]:
        n_cells = len(self._cell_keys)
        if offset is None:
            src = np.arange(n_cells)
            dst = src
        else:
            target = self._cell_keys + np.dot(self._strides, offset)
            pos = np.searchsorted(self._cell_keys, target)
            pos_c = np.minimum(pos, n_cells - 1)
            hit = self._cell_keys[pos_c] == target
            src = np.nonzero(hit)[0]
            dst = pos_c[hit]
        if src.size == 0:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty

        # Expand every (src cell point, dst cell) into a run of candidate
        # partners, in bounded chunks.
        src_sizes = self._ends[src] - self._starts[src]
        dst_sizes = self._ends[dst] - self._starts[dst]
        rows_src = np.repeat(np.arange(src.size), src_sizes)
        row_point = np.arange(rows_src.size) - np.repeat(np.cumsum(src_sizes) - src_sizes, src_sizes)
        row_point = self._starts[src][rows_src] + row_point  # position in sorted order
        row_len = dst_sizes[rows_src]
        row_dst_start = self._starts[dst][rows_src]
        if offset is None:
            # within one cell only keep partners after the point itself
            row_dst_start = row_point + 1
            row_len = self._ends[dst][rows_src] - row_dst_start

        out_i, out_j = [], []
        cum = np.cumsum(row_len)
        begin = 0
        while begin < row_len.size:
            base = cum[begin - 1] if begin else 0
            end = int(np.searchsorted(cum, base + _CHUNK, side="right"))
            end = max(end, begin + 1)
            lens = row_len[begin:end]
            total = int(lens.sum())
            if total:
                a = np.repeat(row_point[begin:end], lens)
                offs = np.arange(total) - np.repeat(np.cumsum(lens) - lens, lens)
                b = np.repeat(row_dst_start[begin:end], lens) + offs
                ia = self._order[a]
                ib = self._order[b]
                keep = squared_distance(self.xyz[ia], self.xyz[ib]) <= self.r2
                out_i.append(ia[keep])
                out_j.append(ib[keep])
            begin = end
        if not out_i:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        return np.concatenate(out_i), np.concatenate(out_j)
