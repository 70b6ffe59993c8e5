"""Ablation runs, lambda sweeps and the JSON results document."""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import GfsError, InputError
from ..tracker import VARIANTS, BoundingBox, TrackerConfig, TrackResult, track_sequence
from .diagnostics import RankDiagnostic, filter_energy_map, rank_diagnostic
from .metrics import MetricsReport, compute_metrics

RESULTS_FORMAT = "gfsdcf-results/1"


@dataclass
class RunOutcome:
    """One tracking run; ``error`` is set instead of ``result`` when it failed."""

    variant: str
    result: Optional[TrackResult] = None
    metrics: Optional[MetricsReport] = None
    heat_map: Optional[np.ndarray] = None
    rank: Optional[RankDiagnostic] = None
    error: Optional[str] = None


def run_tracker(seq, cfg: TrackerConfig) -> TrackResult:
    """Track ``seq`` (anything with ``frames``, ``boxes`` and ``feature_maps``)."""
    if not seq.boxes:
        raise InputError("sequence has no ground truth")
    return track_sequence(seq.frames, seq.boxes[0], cfg, getattr(seq, "feature_maps", None))


def evaluate(seq, cfg: TrackerConfig, variant: Optional[str] = None, dp_threshold: float = 20.0,
             op_iou: float = 0.5) -> RunOutcome:
    """Track and score; tracker errors are captured in the outcome."""
    name = variant or cfg.variant
    try:
        result = run_tracker(seq, cfg)
    except GfsError as exc:
        return RunOutcome(variant=name, error=f"{type(exc).__name__}: {exc}")
    return outcome_from_result(name, result, seq.boxes, dp_threshold, op_iou)


def outcome_from_result(variant: str, result: TrackResult, gt: Sequence[BoundingBox],
                        dp_threshold: float = 20.0, op_iou: float = 0.5) -> RunOutcome:
    rank = rank_diagnostic(result.filter_history) if result.filter_history else None
    return RunOutcome(variant=variant, result=result,
                      metrics=compute_metrics(result.boxes, gt, dp_threshold, op_iou),
                      heat_map=filter_energy_map(result.final_filter), rank=rank)


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_ablation(seq, base_cfg: TrackerConfig, workers: int = 1, **metric_args) -> Dict[str, RunOutcome]:
    """Run the five variants with shared features and update rate.

    A failing variant is reported through its ``error`` field; the others
    still run.
    """
    def one(variant: str) -> RunOutcome:
        return evaluate(seq, replace(base_cfg, variant=variant), variant, **metric_args)

    return dict(zip(VARIANTS, _map(one, list(VARIANTS), workers)))


SWEEP_KEYS = ("lambda_spatial", "lambda_channel", "lambda_temporal")


@dataclass(frozen=True)
class SweepRow:
    lambda_spatial: float
    lambda_channel: float
    lambda_temporal: float
    auc: float
    mean_cle: float
    error: Optional[str] = None


def sensitivity_sweep(seq, base_cfg: TrackerConfig, grid: Dict[str, Sequence[float]],
                      workers: int = 1, **metric_args) -> List[SweepRow]:
    """One run per point of the cartesian product of the lambda lists.

    Keys missing from ``grid`` keep the value of ``base_cfg``.
    """
    unknown = set(grid) - set(SWEEP_KEYS)
    if unknown:
        raise InputError(f"unknown sweep keys: {sorted(unknown)}")
    reg = base_cfg.regularisation
    axes = [list(grid.get(k, [getattr(reg, k)])) for k in SWEEP_KEYS]
    if any(len(a) == 0 for a in axes):
        raise InputError("every sweep axis needs at least one value")
    points = list(itertools.product(*axes))

    def one(point: Tuple[float, float, float]) -> SweepRow:
        cfg = replace(base_cfg, regularisation=replace(reg, **dict(zip(SWEEP_KEYS, point))))
        out = evaluate(seq, cfg, **metric_args)
        if out.error:
            return SweepRow(*point, auc=math.nan, mean_cle=math.nan, error=out.error)
        return SweepRow(*point, auc=out.metrics.auc, mean_cle=out.metrics.mean_cle)

    return _map(one, points, workers)


# --------------------------------------------------------------------------
# results documents

def _finite(v):
    return v if v is None or math.isfinite(v) else None


def outcome_document(out: RunOutcome) -> dict:
    doc: dict = {"variant": out.variant}
    if out.error:
        doc["error"] = out.error
        return doc
    res = out.result
    doc["boxes"] = [b.as_list() for b in res.boxes]
    doc["peak_values"] = [_finite(v) for v in res.peak_values]
    doc["scale_indices"] = list(res.scale_indices)
    doc["channels_kept"] = [int(m.sum()) for m in res.channel_masks]
    doc["metrics"] = out.metrics.as_dict()
    doc["heat_map"] = out.heat_map.tolist()
    if out.rank is not None:
        doc["rank"] = out.rank.as_dict()
    return doc


def results_document(kind: str, sequence: str, config: dict, runs: Sequence[RunOutcome] = (),
                     sweep: Sequence[SweepRow] = ()) -> dict:
    doc = {"format": RESULTS_FORMAT, "kind": kind, "sequence": sequence, "config": config,
           "runs": [outcome_document(r) for r in runs]}
    if sweep:
        doc["sweep"] = [{k: _finite(v) if isinstance(v, float) else v for k, v in asdict(r).items()}
                        for r in sweep]
    return doc


def write_results(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n", encoding="utf-8")


def read_result_boxes(path, variant: Optional[str] = None) -> List[BoundingBox]:
    """Boxes of one run in a results file (the first run unless ``variant``)."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    runs = [r for r in doc.get("runs", []) if "boxes" in r]
    if variant is not None:
        runs = [r for r in runs if r.get("variant") == variant]
    if not runs:
        raise InputError(f"{path}: no tracked run{'' if variant is None else ' for ' + variant}")
    return [BoundingBox(*b) for b in runs[0]["boxes"]]
