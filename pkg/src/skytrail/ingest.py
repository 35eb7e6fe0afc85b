"""Frame sequences, ground truth and trajectories on disk.

Frame CSV schema (header optional on load)::

    frame,t,sensor,x,y,z

A row with an empty sensor and empty coordinates marks a frame with no
returns, so empty frames survive a round trip.

Binary schema (little-endian)::

    b"SKTL" | u32 version
    per frame: u32 index | f64 t | u32 count | count x 3 f64 xyz | count x u8 sensor
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .geometry import PointCloud, Sensor

log = logging.getLogger(__name__)

MAGIC = b"SKTL"
VERSION = 1
FRAME_HEADER = ["frame", "t", "sensor", "x", "y", "z"]
TRAJECTORY_HEADER = ["t", "x", "y", "z", "detected"]


class FormatError(ValueError):
    """Malformed or inconsistent input file."""


@dataclass(frozen=True)
class Frame:
    frame_index: int
    t: float
    points: PointCloud


@dataclass(frozen=True, eq=False)
class SequenceCloud:
    """All frames of one sequence.

    Points live in one frame-ordered :class:`PointCloud`; ``frame_times[k]``
    is the timestamp of frame ``k``.  Frames may be empty.
    """

    cloud: PointCloud
    frame_times: np.ndarray

    def __post_init__(self):
        times = np.ascontiguousarray(self.frame_times, dtype=np.float64)
        times.setflags(write=False)
        object.__setattr__(self, "frame_times", times)
        if len(times) < 1:
            raise FormatError("empty sequence")
        if np.any(np.diff(times) <= 0):
            k = int(np.nonzero(np.diff(times) <= 0)[0][0]) + 1
            raise FormatError(f"time regression at frame {k}")
        f = self.cloud.frame
        if len(f):
            if np.any(np.diff(f) < 0):
                raise FormatError("points not ordered by frame")
            if f[0] < 0 or f[-1] >= len(times):
                raise FormatError("point references a frame outside the sequence")
            if not np.array_equal(self.cloud.t, times[f]):
                raise FormatError("point timestamp disagrees with its frame")

    @classmethod
    def from_frames(cls, frames: list[Frame]) -> "SequenceCloud":
        for k, fr in enumerate(frames):
            if fr.frame_index != k:
                raise FormatError(f"frames not contiguous at index {k}")
        return cls(PointCloud.concat([fr.points for fr in frames]), [fr.t for fr in frames])

    @property
    def n(self) -> int:
        return len(self.frame_times)

    @property
    def duration(self) -> float:
        return float(self.frame_times[-1] - self.frame_times[0])

    def frame_bounds(self) -> np.ndarray:
        """``bounds[k]:bounds[k+1]`` is the slice of ``cloud`` in frame ``k``."""
        return np.searchsorted(self.cloud.frame, np.arange(self.n + 1))

    @property
    def frames(self) -> list[Frame]:
        return list(self.iter_frames())

    def iter_frames(self) -> Iterator[Frame]:
        b = self.frame_bounds()
        for k in range(self.n):
            yield Frame(k, float(self.frame_times[k]), self.cloud.subset(slice(b[k], b[k + 1])))

    def equals(self, other: "SequenceCloud") -> bool:
        return self.frame_times.tobytes() == other.frame_times.tobytes() and self.cloud.equals(other.cloud)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    t: np.ndarray
    xyz: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=np.float64).reshape(-1)
        xyz = np.ascontiguousarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        if len(t) != len(xyz):
            raise ValueError("t and xyz lengths differ")
        d = np.diff(t)
        if np.any(d == 0):
            raise FormatError("duplicate gt timestamp")
        if np.any(d < 0):
            raise FormatError("time regression in ground truth")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "xyz", xyz)

    def __len__(self) -> int:
        return len(self.t)

    def position_at(self, t) -> np.ndarray:
        """Piecewise-linear ground-truth position at arbitrary times."""
        t = np.asarray(t, dtype=np.float64)
        return np.stack([np.interp(t, self.t, self.xyz[:, a]) for a in range(3)], axis=-1)


def _fmt(v: float) -> str:
    return repr(float(v))


def _is_header(cells: list[str], header: list[str]) -> bool:
    return [c.strip().lower() for c in cells] == header


def _parse_float(text: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"line {lineno}: cannot parse number {text!r}") from None


def _data_lines(path: Path, header: list[str]):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if lineno == 1 and _is_header(cells, header):
                continue
            yield lineno, cells


def load_sequence(path, format: str | None = None) -> SequenceCloud:
    """Load a frame sequence from CSV or the binary format.

    ``format`` is ``"csv"`` or ``"bin"``; by default it is taken from the file
    suffix.  Points with non-finite coordinates are dropped and counted.
    """
    path = Path(path)
    fmt = (format or ("bin" if path.suffix.lower() in (".bin", ".sktl") else "csv")).lower()
    if fmt == "csv":
        return _load_sequence_csv(path)
    if fmt == "bin":
        return _load_sequence_bin(path)
    raise ValueError(f"unknown sequence format {format!r}")


def _load_sequence_csv(path: Path) -> SequenceCloud:
    frame_times: list[float] = []
    xyz: list[tuple[float, float, float]] = []
    sensors: list[int] = []
    frames: list[int] = []
    rejected = 0
    for lineno, cells in _data_lines(path, FRAME_HEADER):
        if len(cells) != 6:
            raise FormatError(f"line {lineno}: expected 6 fields, got {len(cells)}")
        try:
            k = int(cells[0])
        except ValueError:
            raise FormatError(f"line {lineno}: bad frame index {cells[0]!r}") from None
        t = _parse_float(cells[1], lineno)
        if not math.isfinite(t) or t < 0:
            raise FormatError(f"line {lineno}: bad timestamp {cells[1]!r}")
        n = len(frame_times)
        if k == n:
            if n and t <= frame_times[-1]:
                raise FormatError(f"time regression at frame {k}")
            frame_times.append(t)
        elif k == n - 1:
            if t != frame_times[-1]:
                raise FormatError(f"line {lineno}: timestamp differs within frame {k}")
        elif k < n - 1:
            raise FormatError(f"line {lineno}: frame {k} out of order")
        else:
            raise FormatError(f"line {lineno}: frame gap before frame {k}")

        sensor, coords = cells[2].strip(), cells[3:]
        if not sensor and all(not c.strip() for c in coords):
            continue  # empty-frame marker
        try:
            s = Sensor.parse(sensor)
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        p = tuple(_parse_float(c, lineno) for c in coords)
        if not all(math.isfinite(v) for v in p):
            rejected += 1
            continue
        xyz.append(p)
        sensors.append(int(s))
        frames.append(k)
    if not frame_times:
        raise FormatError("empty sequence")
    if rejected:
        log.warning("%s: rejected %d points with non-finite coordinates", path, rejected)
    times = np.array(frame_times)
    frames_arr = np.array(frames, dtype=np.int64)
    cloud = PointCloud(np.array(xyz).reshape(-1, 3), times[frames_arr], sensors, frames_arr)
    return SequenceCloud(cloud, times)


def _load_sequence_bin(path: Path) -> SequenceCloud:
    data = path.read_bytes()
    if not data:
        raise FormatError("empty sequence")
    if data[:4] != MAGIC:
        raise FormatError("bad magic, not a sequence file")
    if len(data) < 8:
        raise FormatError("truncated header")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    pos = 8
    frame_times, xyz, sensors, frames = [], [], [], []
    while pos < len(data):
        if pos + 16 > len(data):
            raise FormatError(f"truncated frame header at byte {pos}")
        k, t, count = struct.unpack_from("<IdI", data, pos)
        pos += 16
        if k != len(frame_times):
            raise FormatError(f"frame gap before frame {k}")
        if frame_times and t <= frame_times[-1]:
            raise FormatError(f"time regression at frame {k}")
        end = pos + count * 25
        if end > len(data):
            raise FormatError(f"truncated frame {k}")
        xyz.append(np.frombuffer(data, dtype="<f8", count=3 * count, offset=pos).reshape(count, 3))
        sensors.append(np.frombuffer(data, dtype=np.uint8, count=count, offset=pos + 24 * count))
        frames.append(np.full(count, k, dtype=np.int64))
        frame_times.append(t)
        pos = end
    if not frame_times:
        raise FormatError("empty sequence")
    xyz_all = np.concatenate(xyz)
    sensor_all = np.concatenate(sensors)
    frame_all = np.concatenate(frames)
    if np.any(sensor_all > max(Sensor)):
        raise FormatError("unknown sensor code")
    finite = np.isfinite(xyz_all).all(axis=1)
    if not finite.all():
        log.warning("%s: rejected %d points with non-finite coordinates", path, int((~finite).sum()))
        xyz_all, sensor_all, frame_all = xyz_all[finite], sensor_all[finite], frame_all[finite]
    times = np.array(frame_times)
    return SequenceCloud(PointCloud(xyz_all, times[frame_all], sensor_all, frame_all), times)


def save_sequence(seq: SequenceCloud, path, format: str | None = None) -> None:
    path = Path(path)
    fmt = (format or ("bin" if path.suffix.lower() in (".bin", ".sktl") else "csv")).lower()
    bounds = seq.frame_bounds()
    c = seq.cloud
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(MAGIC + struct.pack("<I", VERSION))
            for k in range(seq.n):
                a, b = bounds[k], bounds[k + 1]
                fh.write(struct.pack("<IdI", k, float(seq.frame_times[k]), int(b - a)))
                fh.write(c.xyz[a:b].astype("<f8").tobytes())
                fh.write(c.sensor[a:b].astype(np.uint8).tobytes())
        return
    if fmt != "csv":
        raise ValueError(f"unknown sequence format {format!r}")
    names = {int(s): s.label for s in Sensor}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(FRAME_HEADER) + "\n")
        for k in range(seq.n):
            a, b = bounds[k], bounds[k + 1]
            t = _fmt(seq.frame_times[k])
            if a == b:
                fh.write(f"{k},{t},,,,\n")
                continue
            for i in range(a, b):
                x, y, z = c.xyz[i]
                fh.write(f"{k},{t},{names[int(c.sensor[i])]},{_fmt(x)},{_fmt(y)},{_fmt(z)}\n")


def load_ground_truth(path) -> GroundTruth:
    """Read ``t,x,y,z`` rows; timestamps must be strictly increasing."""
    path = Path(path)
    rows = []
    for lineno, cells in _data_lines(path, ["t", "x", "y", "z"]):
        if len(cells) != 4:
            raise FormatError(f"line {lineno}: expected 4 fields, got {len(cells)}")
        row = [_parse_float(c, lineno) for c in cells]
        if not all(math.isfinite(v) for v in row):
            raise FormatError(f"line {lineno}: non-finite value")
        if rows and row[0] == rows[-1][0]:
            raise FormatError(f"line {lineno}: duplicate gt timestamp")
        if rows and row[0] < rows[-1][0]:
            raise FormatError(f"line {lineno}: time regression")
        rows.append(row)
    if not rows:
        raise FormatError("empty ground truth")
    arr = np.array(rows)
    return GroundTruth(arr[:, 0], arr[:, 1:])


def save_ground_truth(gt: GroundTruth, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x,y,z\n")
        for t, (x, y, z) in zip(gt.t, gt.xyz):
            fh.write(f"{_fmt(t)},{_fmt(x)},{_fmt(y)},{_fmt(z)}\n")


def load_timestamps(path) -> np.ndarray:
    """Query timestamps from the first column of a CSV (a gt file works)."""
    ts = []
    for lineno, cells in _data_lines(Path(path), ["t"]):
        if lineno == 1 and cells[0].strip().lower() == "t":
            continue
        ts.append(_parse_float(cells[0], lineno))
    if not ts:
        raise FormatError("no timestamps")
    out = np.array(ts)
    if np.any(np.diff(out) <= 0):
        raise FormatError("timestamps must be strictly increasing")
    return out


def save_trajectory(traj, path) -> None:
    """Write ``t,x,y,z,detected`` rows for every sample, ordered by t."""
    if traj is None or len(traj.t) == 0:
        raise ValueError("nothing to save")
    order = np.argsort(traj.t, kind="stable")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRAJECTORY_HEADER) + "\n")
        for i in order:
            x, y, z = traj.xyz[i]
            fh.write(f"{_fmt(traj.t[i])},{_fmt(x)},{_fmt(y)},{_fmt(z)},{int(bool(traj.detected[i]))}\n")


def load_trajectory(path):
    """Read a trajectory CSV back as ``(t, xyz, detected)`` samples."""
    from .trajectory import Samples

    rows = []
    for lineno, cells in _data_lines(Path(path), TRAJECTORY_HEADER):
        if len(cells) != 5:
            raise FormatError(f"line {lineno}: expected 5 fields, got {len(cells)}")
        vals = [_parse_float(c, lineno) for c in cells[:4]]
        flag = cells[4].strip().lower()
        if flag not in ("0", "1", "true", "false"):
            raise FormatError(f"line {lineno}: bad detected flag {cells[4]!r}")
        rows.append(vals + [flag in ("1", "true")])
    if not rows:
        raise FormatError("empty trajectory")
    t = np.array([r[0] for r in rows])
    xyz = np.array([r[1:4] for r in rows])
    det = np.array([r[4] for r in rows], dtype=bool)
    return Samples(t, xyz, det)
