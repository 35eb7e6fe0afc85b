"""Seeded synthetic LiDAR scenes with known target ground truth.

Randomness comes from numpy's PCG64 bit generator seeded with ``spec.seed``;
components are drawn in a fixed order (structures, noise, target), so a scene
is a pure function of its spec.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .geometry import PointCloud, Sensor
from .ingest import GroundTruth, SequenceCloud

STRUCTURE, NOISE, TARGET = 0, 1, 2
# blobs model finite crowns; unbounded tails would leave sparse fringe clusters
BLOB_CUTOFF = 2.5

LABEL_NAMES = {STRUCTURE: "structure", NOISE: "noise", TARGET: "target"}


@dataclass(frozen=True)
class Structure:
    """A stationary object sampled afresh every frame.

    ``kind`` is ``box`` (surface without the bottom face), ``plane``
    (horizontal rectangle of ``size[0] x size[1]``) or ``blob`` (isotropic
    Gaussian of std ``sigma``, truncated at ``BLOB_CUTOFF`` sigma).
    """

    kind: str
    center: tuple[float, float, float]
    size: tuple[float, ...] = (1.0, 1.0, 1.0)
    sigma: float = 1.0
    points_per_frame: int = 10
    sensor: str = "mid360"
    jitter: float = 0.02

    def __post_init__(self):
        if self.kind not in ("box", "plane", "blob"):
            raise ValueError(f"unknown structure kind {self.kind!r}")
        if self.points_per_frame < 0:
            raise ValueError("points_per_frame must be >= 0")
        if len(self.center) != 3:
            raise ValueError("center needs 3 coordinates")
        if self.kind == "box" and (len(self.size) != 3 or min(self.size) <= 0):
            raise ValueError("box size needs 3 positive extents")
        if self.kind == "plane" and (len(self.size) < 2 or min(self.size[:2]) <= 0):
            raise ValueError("plane size needs 2 positive extents")
        if self.kind == "blob" and not self.sigma > 0:
            raise ValueError("blob sigma must be positive")
        if self.jitter < 0:
            raise ValueError("jitter must be >= 0")
        Sensor.parse(self.sensor)


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform returns in the upper half of a spherical shell around the sensor.

    Optional streaks add runs of points along random rays, spaced evenly in
    range.
    """

    count: int = 0
    r_min: float = 2.0
    r_max: float = 400.0
    sensor: str = "avia"
    streaks: int = 0
    streak_points: int = 10
    streak_length: float = 5.0

    def __post_init__(self):
        if self.count < 0 or self.streaks < 0 or self.streak_points < 0:
            raise ValueError("noise counts must be >= 0")
        if not 0 <= self.r_min < self.r_max:
            raise ValueError("need 0 <= r_min < r_max")
        Sensor.parse(self.sensor)


@dataclass(frozen=True)
class TargetSpec:
    """The flying target.

    ``path`` is ``orbit`` (circle of ``radius`` around ``center``, optional
    ``climb`` in m/s) or ``waypoints`` (patrols the polyline back and forth).
    Each frame is a hit with probability ``hit_prob``; a hit yields a uniform
    number of returns in ``[hits_min, hits_max]`` scattered with std
    ``sigma`` (clipped at 3 sigma).
    """

    path: str = "orbit"
    speed: float = 1.0
    center: tuple[float, float, float] = (0.0, 0.0, 30.0)
    radius: float = 5.0
    climb: float = 0.0
    phase: float = 0.0
    waypoints: tuple[tuple[float, float, float], ...] = ()
    hit_prob: float = 0.9
    hits_min: int = 1
    hits_max: int = 5
    sigma: float = 0.1
    sensor: str = "avia"

    def __post_init__(self):
        if self.path not in ("orbit", "waypoints"):
            raise ValueError(f"unknown target path {self.path!r}")
        if not 0.0 <= self.hit_prob <= 1.0:
            raise ValueError("hit_prob must lie in [0, 1]")
        if not 0 <= self.hits_min <= self.hits_max:
            raise ValueError("need 0 <= hits_min <= hits_max")
        if self.speed < 0 or self.sigma < 0:
            raise ValueError("speed and sigma must be >= 0")
        if self.path == "orbit" and not self.radius > 0:
            raise ValueError("orbit radius must be positive")
        if self.path == "waypoints" and len(self.waypoints) < 2:
            raise ValueError("waypoint path needs at least 2 waypoints")
        Sensor.parse(self.sensor)

    def position(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if self.path == "orbit":
            ang = self.phase + self.speed / self.radius * t
            c = np.asarray(self.center, dtype=np.float64)
            return np.stack(
                [c[0] + self.radius * np.cos(ang), c[1] + self.radius * np.sin(ang), c[2] + self.climb * t],
                axis=-1,
            )
        wp = np.asarray(self.waypoints, dtype=np.float64)
        seg = np.linalg.norm(np.diff(wp, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        total = cum[-1]
        s = self.speed * t
        if total > 0:
            s = np.mod(s, 2 * total)
            s = np.where(s > total, 2 * total - s, s)
        else:
            s = np.zeros_like(s)
        return np.stack([np.interp(s, cum, wp[:, a]) for a in range(3)], axis=-1)


@dataclass(frozen=True)
class SceneSpec:
    name: str = "scene"
    seed: int = 0
    duration: float = 30.0
    frame_rate: float = 20.0
    structures: tuple[Structure, ...] = ()
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    target: TargetSpec = field(default_factory=TargetSpec)

    def __post_init__(self):
        if not self.frame_rate > 0:
            raise ValueError("frame_rate must be positive")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.n_frames < 1:
            raise ValueError("scene has no frames")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * self.frame_rate))

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        d = dict(d)
        known = {"name", "seed", "duration", "frame_rate", "structures", "noise", "target"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scene keys: {sorted(unknown)}")
        structures = tuple(Structure(**_tuplify(s)) for s in d.pop("structures", ()))
        noise = NoiseSpec(**d.pop("noise", {}))
        target = TargetSpec(**_tuplify(d.pop("target", {})))
        return cls(structures=structures, noise=noise, target=target, **d)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def load(cls, path) -> "SceneSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _tuplify(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, list):
            v = tuple(tuple(x) if isinstance(x, list) else x for x in v)
        out[k] = v
    return out


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    spec: SceneSpec
    sequence: SequenceCloud
    gt: GroundTruth
    labels: np.ndarray  # STRUCTURE / NOISE / TARGET per point
    source: np.ndarray  # structure index for STRUCTURE points, -1 otherwise

    def counts(self) -> dict[str, int]:
        return {name: int((self.labels == k).sum()) for k, name in LABEL_NAMES.items()}


def _bounded_normal(n: int, sigma: float, cutoff: float, rng: np.random.Generator) -> np.ndarray:
    """Isotropic normal offsets redrawn until they fall within ``cutoff * sigma``."""
    out = rng.normal(0.0, sigma, size=(n, 3))
    bad = np.linalg.norm(out, axis=1) > cutoff * sigma
    while bad.any():
        out[bad] = rng.normal(0.0, sigma, size=(int(bad.sum()), 3))
        bad = np.linalg.norm(out, axis=1) > cutoff * sigma
    return out


def _sample_structure(s: Structure, n: int, rng: np.random.Generator) -> np.ndarray:
    c = np.asarray(s.center, dtype=np.float64)
    if s.kind == "blob":
        pts = c + _bounded_normal(n, s.sigma, BLOB_CUTOFF, rng)
    elif s.kind == "plane":
        sx, sy = s.size[0], s.size[1]
        u = rng.uniform(-0.5, 0.5, size=(n, 2)) * (sx, sy)
        pts = np.column_stack([c[0] + u[:, 0], c[1] + u[:, 1], np.full(n, c[2])])
    else:
        sx, sy, sz = s.size
        # faces: +x, -x, +y, -y, top
        areas = np.array([sy * sz, sy * sz, sx * sz, sx * sz, sx * sy])
        face = rng.choice(5, size=n, p=areas / areas.sum())
        uv = rng.uniform(-0.5, 0.5, size=(n, 2))
        half = np.array([sx, sy, sz]) / 2
        pts = np.empty((n, 3))
        for f, (axis, sign) in enumerate([(0, 1), (0, -1), (1, 1), (1, -1), (2, 1)]):
            m = face == f
            others = [a for a in range(3) if a != axis]
            pts[m, axis] = sign * half[axis]
            pts[m, others[0]] = uv[m, 0] * 2 * half[others[0]]
            pts[m, others[1]] = uv[m, 1] * 2 * half[others[1]]
        pts += c
    if s.jitter > 0:
        pts = pts + rng.normal(0.0, s.jitter, size=pts.shape)
    return pts


def _random_directions(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v[:, 2] = np.abs(v[:, 2])
    return v


def _sample_noise(ns: NoiseSpec, n_frames: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    total = ns.count * n_frames
    dirs = _random_directions(total, rng)
    # uniform in shell volume
    r3 = rng.uniform(ns.r_min**3, ns.r_max**3, size=total)
    pts = dirs * np.cbrt(r3)[:, None]
    frames = np.repeat(np.arange(n_frames), ns.count)
    if ns.streaks and ns.streak_points:
        ns_total = ns.streaks * n_frames
        sdirs = _random_directions(ns_total, rng)
        r0 = rng.uniform(ns.r_min, max(ns.r_min, ns.r_max - ns.streak_length), size=ns_total)
        steps = np.linspace(0.0, ns.streak_length, ns.streak_points)
        r = r0[:, None] + steps[None, :]
        spts = (sdirs[:, None, :] * r[:, :, None]).reshape(-1, 3)
        pts = np.vstack([pts, spts])
        frames = np.concatenate([frames, np.repeat(np.arange(n_frames), ns.streaks * ns.streak_points)])
    return pts, frames


def _sample_target(ts: TargetSpec, times: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n_frames = len(times)
    hit = rng.random(n_frames) < ts.hit_prob
    k = rng.integers(ts.hits_min, ts.hits_max + 1, size=n_frames)
    k = np.where(hit, k, 0)
    frames = np.repeat(np.arange(n_frames), k)
    centers = ts.position(times[frames])
    off = rng.normal(0.0, ts.sigma, size=centers.shape) if ts.sigma > 0 else np.zeros_like(centers)
    norm = np.linalg.norm(off, axis=1)
    cap = 3.0 * ts.sigma
    scale = np.where(norm > cap, cap / np.where(norm > 0, norm, 1.0), 1.0)
    return centers + off * scale[:, None], frames


def generate(spec: SceneSpec) -> SyntheticScene:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = spec.n_frames
    times = np.arange(n) / spec.frame_rate

    parts_xyz, parts_frame, parts_sensor, parts_label, parts_source = [], [], [], [], []

    def add(xyz, frames, sensor, label, source):
        parts_xyz.append(xyz)
        parts_frame.append(frames)
        parts_sensor.append(np.full(len(frames), int(Sensor.parse(sensor)), dtype=np.int8))
        parts_label.append(np.full(len(frames), label, dtype=np.int8))
        parts_source.append(np.full(len(frames), source, dtype=np.int64))

    for si, s in enumerate(spec.structures):
        pts = _sample_structure(s, s.points_per_frame * n, rng)
        add(pts, np.repeat(np.arange(n), s.points_per_frame), s.sensor, STRUCTURE, si)
    npts, nframes = _sample_noise(spec.noise, n, rng)
    add(npts, nframes, spec.noise.sensor, NOISE, -1)
    tpts, tframes = _sample_target(spec.target, times, rng)
    add(tpts, tframes, spec.target.sensor, TARGET, -1)

    frames = np.concatenate(parts_frame)
    order = np.argsort(frames, kind="stable")
    frames = frames[order]
    xyz = np.concatenate(parts_xyz)[order]
    cloud = PointCloud(xyz, times[frames], np.concatenate(parts_sensor)[order], frames)
    gt = GroundTruth(times, spec.target.position(times))
    return SyntheticScene(
        spec,
        SequenceCloud(cloud, times),
        gt,
        np.concatenate(parts_label)[order],
        np.concatenate(parts_source)[order],
    )


# shared stationary scenery for the standard suite
_GROUND = Structure("plane", (0.0, 0.0, 0.0), size=(30.0, 30.0), points_per_frame=30)
_TOWER_A = Structure("box", (15.0, -10.0, 7.5), size=(10.0, 10.0, 15.0), points_per_frame=40)
_TOWER_B = Structure("box", (-12.0, 14.0, 10.0), size=(8.0, 12.0, 20.0), points_per_frame=40)
_TREE_1 = Structure("blob", (5.0, 12.0, 3.0), sigma=1.2, points_per_frame=12)
_TREE_2 = Structure("blob", (-8.0, -8.0, 2.5), sigma=1.0, points_per_frame=12)


def standard_suite() -> list[SceneSpec]:
    return [
        SceneSpec(
            name="clean-hover",
            seed=101,
            structures=(_GROUND, _TREE_1),
            noise=NoiseSpec(count=0),
            target=TargetSpec(path="orbit", center=(0.0, 0.0, 35.0), radius=4.0, speed=1.5, hit_prob=1.0),
        ),
        SceneSpec(
            name="urban-canyon",
            seed=202,
            structures=(_GROUND, _TOWER_A, _TOWER_B, _TREE_1, _TREE_2),
            noise=NoiseSpec(count=200, r_min=3.0, r_max=400.0),
            target=TargetSpec(
                path="waypoints",
                waypoints=((-20.0, -20.0, 30.0), (20.0, -5.0, 38.0), (10.0, 25.0, 45.0)),
                speed=2.5,
                hit_prob=0.85,
            ),
        ),
        SceneSpec(
            name="fast-transit",
            seed=303,
            structures=(_GROUND, _TOWER_A, _TREE_1),
            noise=NoiseSpec(count=20, r_min=3.0, r_max=400.0),
            target=TargetSpec(
                path="waypoints",
                waypoints=((-80.0, -30.0, 40.0), (80.0, 30.0, 50.0)),
                speed=4.0,
                hit_prob=0.96,
            ),
        ),
        SceneSpec(
            name="sparse-hits",
            seed=404,
            structures=(_GROUND, _TOWER_B, _TREE_2),
            noise=NoiseSpec(count=50, r_min=3.0, r_max=400.0),
            target=TargetSpec(path="orbit", center=(0.0, 0.0, 40.0), radius=6.0, speed=0.6, hit_prob=0.3),
        ),
    ]


def random_scene(seed: int, n_structures: int = 4, duration: float = 30.0) -> SceneSpec:
    """One mover among ``n_structures`` separate stationary objects, all drawn from ``seed``.

    Structures sit on a ring with gaps wide enough that they never merge into
    one cluster.  The target flies above them on an orbit or on a waypoint
    leg of at least 30 m, so it keeps reaching new space.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    structures = []
    angles = rng.permutation(n_structures) * (2 * np.pi / n_structures) + rng.uniform(0.0, 2 * np.pi)
    for ang in angles:
        r = rng.uniform(15.0, 25.0)
        x, y = r * np.cos(ang), r * np.sin(ang)
        kind = rng.choice(["box", "blob", "plane"])
        if kind == "box":
            w, d, h = rng.uniform(3.0, 7.0, 3) * (1.0, 1.0, 2.5)
            structures.append(Structure("box", (x, y, h / 2), size=(w, d, h), points_per_frame=int(rng.integers(20, 50))))
        elif kind == "blob":
            structures.append(Structure("blob", (x, y, rng.uniform(1.5, 4.0)), sigma=rng.uniform(0.6, 1.5),
                                        points_per_frame=int(rng.integers(8, 20))))
        else:
            structures.append(Structure("plane", (x, y, 0.0), size=tuple(rng.uniform(4.0, 8.0, 2)),
                                        points_per_frame=int(rng.integers(10, 30))))
    alt = rng.uniform(30.0, 45.0)
    hit_prob = rng.uniform(0.85, 1.0)
    if rng.random() < 0.5:
        target = TargetSpec(path="orbit", center=(*rng.uniform(-10.0, 10.0, 2), alt), radius=rng.uniform(3.0, 8.0),
                            speed=rng.uniform(1.0, 2.5), phase=rng.uniform(0.0, 2 * np.pi), hit_prob=hit_prob)
    else:
        heading = rng.uniform(0.0, 2 * np.pi)
        half = rng.uniform(15.0, 30.0)
        d = np.array([np.cos(heading), np.sin(heading)]) * half
        a = (-d[0], -d[1], alt)
        b = (d[0], d[1], alt + rng.uniform(-5.0, 5.0))
        target = TargetSpec(path="waypoints", waypoints=(a, b), speed=rng.uniform(1.5, 3.0), hit_prob=hit_prob)
    return SceneSpec(
        name=f"random-{seed}",
        seed=seed,
        duration=duration,
        structures=tuple(structures),
        noise=NoiseSpec(count=int(rng.integers(0, 100)), r_min=3.0, r_max=400.0),
        target=target,
    )


def suite_scene(name: str) -> SceneSpec:
    for s in standard_suite():
        if s.name == name:
            return s
    raise KeyError(name)


def write_scene(scene: SyntheticScene, out_dir, fmt: str = "bin") -> dict[str, Path]:
    """Write sequence, ground truth, per-point labels and the spec into ``out_dir``."""
    from .ingest import save_ground_truth, save_sequence

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "sequence": out / f"sequence.{fmt}",
        "gt": out / "gt.csv",
        "labels": out / "labels.csv",
        "spec": out / "spec.json",
    }
    save_sequence(scene.sequence, paths["sequence"], fmt)
    save_ground_truth(scene.gt, paths["gt"])
    with open(paths["labels"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label,source\n")
        for lab, src in zip(scene.labels, scene.source):
            fh.write(f"{LABEL_NAMES[int(lab)]},{int(src)}\n")
    with open(paths["spec"], "w", encoding="utf-8", newline="\n") as fh:
        json.dump(scene.spec.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def path_distance(scene: SyntheticScene, xyz: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Distance of points to the target's true position at their timestamps."""
    return np.linalg.norm(np.asarray(xyz) - scene.gt.position_at(t), axis=1)

