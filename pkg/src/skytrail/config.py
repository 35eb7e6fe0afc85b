"""Pipeline configuration: defaults < JSON file < ``key=value`` overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .cluster import DbscanParams
from .denoise import DenoiseParams
from .geometry import Sensor
from .score import ScoringConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterConfig:
    eps: float = 0.8
    min_pts: int = 5
    window_frames: int = 20
    voxel_resolution: float = 0.5

    def __post_init__(self):
        DbscanParams(self.eps, self.min_pts)
        if self.window_frames < 1:
            raise ValueError("window_frames must be >= 1")
        if not self.voxel_resolution > 0:
            raise ValueError("bad resolution")

    @property
    def dbscan(self) -> DbscanParams:
        return DbscanParams(self.eps, self.min_pts)


@dataclass(frozen=True)
class TrajectoryConfig:
    median_window: int = 5

    def __post_init__(self):
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise ValueError("median_window must be odd and >= 1")


@dataclass(frozen=True)
class PipelineConfig:
    denoise: DenoiseParams = field(default_factory=DenoiseParams)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    score: ScoringConfig = field(default_factory=ScoringConfig)
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    input: str | None = None
    timestamps: str | None = None
    output: str | None = None
    report: str | None = None

    def to_dict(self) -> dict:
        return {
            "denoise": {
                "radius": self.denoise.radius,
                "min_neighbors": self.denoise.min_neighbors,
                "sensors": sorted(s.label for s in self.denoise.apply_to),
            },
            "cluster": {
                "eps": self.cluster.eps,
                "min_pts": self.cluster.min_pts,
                "window_frames": self.cluster.window_frames,
                "voxel_resolution": self.cluster.voxel_resolution,
            },
            "score": {
                "lambda": self.score.lam,
                "iou_floor": self.score.iou_floor,
                "min_active_windows": self.score.min_active_windows,
                "normalize": self.score.normalize,
            },
            "trajectory": {"median_window": self.trajectory.median_window},
            "input": self.input,
            "timestamps": self.timestamps,
            "output": self.output,
            "report": self.report,
        }

    @classmethod
    def from_dict(cls, data: dict | None = None, overrides: dict | None = None) -> "PipelineConfig":
        flat = flatten(cls().to_dict())
        for source in (data or {}, overrides or {}):
            for key, value in flatten(source).items():
                if key not in flat:
                    raise ConfigError(f"unknown config key: {key}")
                flat[key] = value
        try:
            return cls(
                denoise=DenoiseParams(
                    radius=float(flat["denoise.radius"]),
                    min_neighbors=_int(flat["denoise.min_neighbors"]),
                    apply_to=frozenset(Sensor.parse(s) for s in _names(flat["denoise.sensors"])),
                ),
                cluster=ClusterConfig(
                    eps=float(flat["cluster.eps"]),
                    min_pts=_int(flat["cluster.min_pts"]),
                    window_frames=_int(flat["cluster.window_frames"]),
                    voxel_resolution=float(flat["cluster.voxel_resolution"]),
                ),
                score=ScoringConfig(
                    lam=float(flat["score.lambda"]),
                    iou_floor=float(flat["score.iou_floor"]),
                    min_active_windows=_int(flat["score.min_active_windows"]),
                    normalize=_bool(flat["score.normalize"]),
                ),
                trajectory=TrajectoryConfig(median_window=_int(flat["trajectory.median_window"])),
                input=flat["input"],
                timestamps=flat["timestamps"],
                output=flat["output"],
                report=flat["report"],
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config: {exc}") from None

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "PipelineConfig":
        data = {}
        if path is not None:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            if not isinstance(data, dict):
                raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(data, overrides)


def flatten(d: dict, prefix: str = "") -> dict:
    """Nested sections to dotted keys; dotted keys pass through unchanged."""
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_override(text: str) -> tuple[str, object]:
    """``cluster.eps=0.6`` -> ``("cluster.eps", 0.6)``; values are JSON when they parse."""
    if "=" not in text:
        raise ConfigError(f"override must look like key=value: {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _int(v) -> int:
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise ValueError(f"expected an integer, got {v!r}")
    return int(v)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "false"):
        return v.lower() == "true"
    raise ValueError(f"expected a boolean, got {v!r}")


def _names(v) -> list[str]:
    if isinstance(v, str):
        return [s for s in v.split(",") if s.strip()]
    return list(v)
