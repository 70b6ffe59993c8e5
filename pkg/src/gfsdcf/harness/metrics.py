"""Tracking accuracy: centre error, distance/overlap precision and AUC."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import InputError
from ..tracker import BoundingBox

PRECISION_THRESHOLDS = np.arange(0, 51, dtype=np.float64)
SUCCESS_THRESHOLDS = np.round(np.linspace(0.0, 1.0, 21), 10)


@dataclass(frozen=True)
class MetricsReport:
    mean_cle: float
    dp_threshold: float
    dp_at_threshold: float
    op_iou: float
    op_at_iou: float
    auc: float
    precision_curve: Tuple[Tuple[float, float], ...]
    success_curve: Tuple[Tuple[float, float], ...]
    n_frames: int

    def as_dict(self) -> dict:
        return {
            "mean_cle": self.mean_cle,
            "dp_threshold": self.dp_threshold,
            "dp": self.dp_at_threshold,
            "op_iou": self.op_iou,
            "op": self.op_at_iou,
            "auc": self.auc,
            "n_frames": self.n_frames,
            "precision_curve": [list(p) for p in self.precision_curve],
            "success_curve": [list(p) for p in self.success_curve],
        }


def _as_array(boxes) -> np.ndarray:
    rows = [b.as_list() if isinstance(b, BoundingBox) else list(b) for b in boxes]
    arr = np.asarray(rows, dtype=np.float64).reshape(-1, 4)
    return arr


def centre_errors(pred, gt) -> np.ndarray:
    p, g = _as_array(pred), _as_array(gt)
    pc = p[:, :2] + p[:, 2:] / 2.0
    gc = g[:, :2] + g[:, 2:] / 2.0
    return np.hypot(pc[:, 0] - gc[:, 0], pc[:, 1] - gc[:, 1])


def overlaps(pred, gt) -> np.ndarray:
    """Per-frame intersection over union."""
    p, g = _as_array(pred), _as_array(gt)
    x0 = np.maximum(p[:, 0], g[:, 0])
    y0 = np.maximum(p[:, 1], g[:, 1])
    x1 = np.minimum(p[:, 0] + p[:, 2], g[:, 0] + g[:, 2])
    y1 = np.minimum(p[:, 1] + p[:, 3], g[:, 1] + g[:, 3])
    inter = np.clip(x1 - x0, 0.0, None) * np.clip(y1 - y0, 0.0, None)
    union = p[:, 2] * p[:, 3] + g[:, 2] * g[:, 3] - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    # identical boxes are exactly 1, independent of float rounding in the union
    if a.as_list() == b.as_list():
        return 1.0
    return float(min(overlaps([a], [b])[0], np.nextafter(1.0, 0.0)))


def compute_metrics(pred: Sequence, gt: Sequence, dp_threshold: float = 20.0,
                    op_iou: float = 0.5) -> MetricsReport:
    if len(pred) != len(gt):
        raise InputError(f"prediction has {len(pred)} boxes, ground truth {len(gt)}")
    if len(pred) == 0:
        raise InputError("at least one frame is required")
    cle = centre_errors(pred, gt)
    ious = np.array([iou(_box(a), _box(b)) for a, b in zip(pred, gt)])
    precision = tuple((float(t), float(np.mean(cle <= t))) for t in PRECISION_THRESHOLDS)
    success = tuple((float(t), float(np.mean(ious >= t))) for t in SUCCESS_THRESHOLDS)
    return MetricsReport(
        mean_cle=float(np.mean(cle)),
        dp_threshold=float(dp_threshold),
        dp_at_threshold=float(np.mean(cle <= dp_threshold)),
        op_iou=float(op_iou),
        op_at_iou=float(np.mean(ious >= op_iou)),
        auc=float(np.mean([f for _, f in success])),
        precision_curve=precision,
        success_curve=success,
        n_frames=len(pred),
    )


def _box(b) -> BoundingBox:
    return b if isinstance(b, BoundingBox) else BoundingBox(*(float(v) for v in b))


def curve_csv(curve: Sequence[Tuple[float, float]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["threshold", "fraction"])
    for t, f in curve:
        writer.writerow([f"{t:g}", f"{f:.6f}"])
    return out.getvalue()


def format_report(report: MetricsReport) -> str:
    lines: List[str] = [
        f"frames      {report.n_frames}",
        f"mean CLE    {report.mean_cle:.3f} px",
        f"DP@{report.dp_threshold:g}px    {report.dp_at_threshold:.3f}",
        f"OP@{report.op_iou:g}      {report.op_at_iou:.3f}",
        f"AUC         {report.auc:.3f}",
    ]
    return "\n".join(lines)
