"""Trajectory accuracy (MSE) and sequence detection accuracy (SDA)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .ingest import GroundTruth

MATCH_ATOL = 1e-9  # seconds


@dataclass(frozen=True)
class EvalReport:
    mse: float | None
    sda: float
    matched_count: int
    undetected_time: float

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        mse = "n/a" if self.mse is None else f"{self.mse:.6f}"
        rows = [
            ("MSE [m^2]", mse),
            ("SDA", f"{self.sda:.6f}"),
            ("matched samples", str(self.matched_count)),
            ("undetected time [s]", f"{self.undetected_time:.3f}"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def match_samples(pred_t: np.ndarray, gt_t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs ``(pred_i, gt_i)`` whose timestamps coincide."""
    pos = np.searchsorted(gt_t, pred_t)
    best = np.clip(pos, 0, len(gt_t) - 1)
    left = np.clip(pos - 1, 0, len(gt_t) - 1)
    closer_left = np.abs(gt_t[left] - pred_t) < np.abs(gt_t[best] - pred_t)
    best = np.where(closer_left, left, best)
    ok = np.abs(gt_t[best] - pred_t) <= MATCH_ATOL
    return np.nonzero(ok)[0], best[ok]


def mse(pred, gt: GroundTruth) -> float:
    """Mean squared Euclidean error over matched, detected samples."""
    pi, gi = match_samples(pred.t, gt.t)
    det = pred.detected[pi]
    pi, gi = pi[det], gi[det]
    if len(pi) == 0:
        raise ValueError("nothing to score")
    d = pred.xyz[pi] - gt.xyz[gi]
    return float(np.mean(np.sum(d * d, axis=1)))


def sample_weights(t: np.ndarray) -> np.ndarray:
    """Time represented by each sample: half the gap to each neighbor.

    End samples mirror their single gap, so uniform timestamps get equal
    weights.  A lone sample gets weight 1.
    """
    t = np.asarray(t, dtype=np.float64)
    if len(t) == 1:
        return np.ones(1)
    gaps = np.diff(t)
    w = np.empty(len(t))
    w[1:-1] = 0.5 * (gaps[:-1] + gaps[1:])
    w[0] = gaps[0]
    w[-1] = gaps[-1]
    return w


def sda(pred, total_time: float | None = None) -> float:
    """Detected share of sequence time.

    ``total_time`` defaults to the time covered by the samples themselves.
    """
    if len(pred.t) == 0:
        return 0.0
    w = sample_weights(pred.t)
    total = math.fsum(w) if total_time is None else float(total_time)
    if not total > 0:
        raise ValueError("total_time must be positive")
    return min(1.0, math.fsum(w[pred.detected]) / total)


def evaluate(pred, gt: GroundTruth) -> EvalReport:
    w = sample_weights(pred.t)
    undetected = float(w[~pred.detected].sum())
    pi, _ = match_samples(pred.t, gt.t)
    matched = int(pred.detected[pi].sum())
    return EvalReport(
        mse=mse(pred, gt) if matched else None,
        sda=sda(pred),
        matched_count=matched,
        undetected_time=undetected,
    )
