"""Uniform cubic B-spline through the segmented target points.

Control points are the time-sorted target returns.  Several returns may share
a timestamp; all of them are kept, in stored order.  The span between
consecutive control points ``P[i]`` and ``P[i+1]`` is evaluated with segment
``(P[i-1], P[i], P[i+1], P[i+2])`` and ``u`` linear in time across the span.
Phantom end points ``2*P[0] - P[1]`` and ``2*P[-1] - P[-2]`` let the curve
reach the first and last control points while keeping linear precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .geometry import PointCloud


@dataclass(frozen=True, eq=False)
class Samples:
    t: np.ndarray
    xyz: np.ndarray
    detected: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "xyz", np.asarray(self.xyz, dtype=np.float64).reshape(len(t), 3))
        object.__setattr__(self, "detected", np.asarray(self.detected, dtype=bool).reshape(len(t)))
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True, eq=False)
class Trajectory:
    control_points: PointCloud
    samples: Samples

    # delegate so a Trajectory can be saved/evaluated like bare samples
    @property
    def t(self) -> np.ndarray:
        return self.samples.t

    @property
    def xyz(self) -> np.ndarray:
        return self.samples.xyz

    @property
    def detected(self) -> np.ndarray:
        return self.samples.detected

    def __len__(self) -> int:
        return len(self.samples)


def sort_by_time(points: PointCloud) -> PointCloud:
    """Stable time sort, so same-timestamp returns stay in stored order."""
    return points.subset(np.argsort(points.t, kind="stable"))


def prefilter(points: PointCloud, window: int) -> PointCloud:
    """Per-coordinate sliding median over the time-sorted points.

    Edges are padded by repeating the first/last point.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("median window must be odd and >= 1")
    if len(points) == 0:
        raise ValueError("no trajectory points")
    points = sort_by_time(points)
    if window == 1:
        return points
    half = window // 2
    padded = np.pad(points.xyz, ((half, half), (0, 0)), mode="edge")
    med = np.median(sliding_window_view(padded, window, axis=0), axis=-1)
    return PointCloud(med, points.t, points.sensor, points.frame)


def basis(u) -> np.ndarray:
    """Uniform cubic B-spline weights for ``p0..p3``, shape ``(..., 4)``.

    The weights sum to one for every ``u``; ``u=0`` gives ``[1, 4, 1, 0]/6``
    and ``u=1`` gives ``[0, 1, 4, 1]/6``.
    """
    u = np.asarray(u, dtype=np.float64)
    u2 = u * u
    u3 = u2 * u
    return np.stack([(1 - u) ** 3, 3 * u3 - 6 * u2 + 4, -3 * u3 + 3 * u2 + 3 * u + 1, u3], axis=-1) / 6.0


def spline_eval(p0, p1, p2, p3, u: float) -> np.ndarray:
    if not 0.0 <= u <= 1.0:
        raise ValueError("parameter out of range")
    w = basis(u)
    ctrl = np.array([p0, p1, p2, p3], dtype=np.float64)
    return w @ ctrl


def _padded(xyz: np.ndarray) -> np.ndarray:
    return np.vstack([2 * xyz[0] - xyz[1], xyz, 2 * xyz[-1] - xyz[-2]])


def evaluate(control: PointCloud, t) -> np.ndarray:
    """Spline position at times inside ``[control.t[0], control.t[-1]]``.

    ``control`` must be time-sorted.  At a timestamp shared by several control
    points the span *starting* at the last of them is used.
    """
    ts = control.t
    q = _padded(control.xyz)
    t = np.asarray(t, dtype=np.float64)
    m = len(ts)
    i = np.searchsorted(ts, t, side="right") - 1
    at_end = i >= m - 1
    if at_end.any():
        # close the curve with the last span of positive length, at u = 1
        i = i.copy()
        i[at_end] = np.searchsorted(ts, ts[-1], side="left") - 1
    t0, t1 = ts[i], ts[i + 1]
    u = np.clip((t - t0) / (t1 - t0), 0.0, 1.0)
    w = basis(u)
    # q is shifted by one: P[i-1] is q[i]
    return (
        w[..., 0:1] * q[i]
        + w[..., 1:2] * q[i + 1]
        + w[..., 2:3] * q[i + 2]
        + w[..., 3:4] * q[i + 3]
    )


def interpolate(control: PointCloud, query_ts) -> Trajectory:
    """Fit and sample the spline at ``query_ts``.

    Queries outside the control points' time span get the nearest boundary
    position and ``detected=False``.
    """
    if len(control) < 4:
        raise ValueError("insufficient points for spline")
    control = sort_by_time(control)
    ts = control.t
    if ts[-1] <= ts[0]:
        raise ValueError("control points span no time")
    query = np.asarray(query_ts, dtype=np.float64).reshape(-1)
    if np.any(np.diff(query) <= 0):
        raise ValueError("query timestamps must be strictly increasing")
    inside = (query >= ts[0]) & (query <= ts[-1])
    xyz = evaluate(control, np.clip(query, ts[0], ts[-1]))
    return Trajectory(control, Samples(query, xyz, inside))
