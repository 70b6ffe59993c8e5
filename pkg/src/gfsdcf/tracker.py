"""Frame-to-frame tracking loop built on the group-sparse filter solver."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import solver
from .errors import ConfigError, InputError, SequenceIOError
from .features import FeatureSpec, concat_blocks, crop_feature_grid, crop_window, extract
from .solver import AdmmConfig, RegularisationConfig, SelectionConfig
from .tensor import circ_correlate

VARIANTS = ("baseline", "ss", "cs", "lr", "all")


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise InputError(f"box width and height must be positive, got {self.w} x {self.h}")

    @property
    def centre(self) -> Tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    @classmethod
    def from_centre(cls, cx: float, cy: float, w: float, h: float) -> "BoundingBox":
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)

    def as_list(self) -> List[float]:
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True)
class TrackerConfig:
    features: FeatureSpec = field(default_factory=lambda: FeatureSpec(cell_size=2))
    regularisation: RegularisationConfig = field(default_factory=RegularisationConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    admm: AdmmConfig = field(default_factory=AdmmConfig)
    alpha: float = 0.6
    padding: float = 1.5
    sigma_factor: float = 0.1
    scale_factors: Tuple[float, ...] = (0.98, 1.0, 1.02)
    scale_penalty: float = 0.97
    variant: str = "all"
    model_side: int = 64
    keep_history: bool = False
    subcell: bool = True
    normalise_features: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scale_factors", tuple(float(s) for s in self.scale_factors))
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if 1.0 not in self.scale_factors or any(s <= 0 for s in self.scale_factors):
            raise ConfigError("scale_factors must be positive and contain 1.0")
        if not 0 < self.scale_penalty <= 1:
            raise ConfigError("scale_penalty must lie in (0, 1]")
        if not 0 <= self.alpha <= 1:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.padding < 0 or self.sigma_factor <= 0:
            raise ConfigError("padding must be >= 0 and sigma_factor > 0")
        if self.model_side % self.features.cell_size:
            raise ConfigError("model_side must be a multiple of cell_size")

    @property
    def external(self) -> bool:
        return self.features.feature_types == ("external",)

    def effective(self) -> Tuple[RegularisationConfig, SelectionConfig]:
        """Regularisation and selection actually used by ``variant``."""
        reg, sel = self.regularisation, self.selection
        use_ss = self.variant in ("ss", "all")
        use_cs = self.variant in ("cs", "all")
        use_lr = self.variant in ("lr", "all")
        reg = replace(reg,
                      lambda_spatial=reg.lambda_spatial if use_ss else 0.0,
                      lambda_channel=reg.lambda_channel if use_cs else 0.0,
                      lambda_temporal=reg.lambda_temporal if use_lr else 0.0)
        sel = replace(sel,
                      spatial_ratio=sel.spatial_ratio if use_ss else 1.0,
                      channel_ratio=sel.channel_ratio if use_cs else 1.0)
        return reg, sel


@dataclass(frozen=True)
class ResponseMap:
    values: np.ndarray
    peak: Tuple[int, int]
    peak_value: float
    scale_index: int


@dataclass(frozen=True)
class TrackState:
    cfg: TrackerConfig
    box: BoundingBox
    grid: int
    model_filter: np.ndarray
    prev_filter: np.ndarray
    blocks: Tuple[Tuple[int, int], ...]
    frame_index: int = 1
    filter_history: Optional[Tuple[np.ndarray, ...]] = None
    last_mask: Optional[solver.SelectionMask] = None


@dataclass
class TrackResult:
    boxes: List[BoundingBox]
    peak_values: List[float] = field(default_factory=list)
    scale_indices: List[int] = field(default_factory=list)
    channel_masks: List[np.ndarray] = field(default_factory=list)
    spatial_masks: List[np.ndarray] = field(default_factory=list)
    filter_history: Optional[List[np.ndarray]] = None
    final_filter: Optional[np.ndarray] = None


# --------------------------------------------------------------------------
# geometry helpers

def window_side(box: BoundingBox, cfg: TrackerConfig) -> float:
    return max(box.w, box.h) * (1.0 + cfg.padding)


def _grid_size(box: BoundingBox, cfg: TrackerConfig) -> int:
    if not cfg.external:
        return cfg.model_side // cfg.features.cell_size
    n = int(round(window_side(box, cfg) / cfg.features.cell_size))
    return max(4, n + (n % 2))


def _cell_pixels(box: BoundingBox, cfg: TrackerConfig, grid: int) -> float:
    if cfg.external:
        return float(cfg.features.cell_size)
    return window_side(box, cfg) / grid


def signed_offset(index: int, n: int) -> int:
    """Circular peak index to a signed displacement in cells."""
    return index - n if index > n // 2 else index


def subcell_offset(values: np.ndarray, peak: Tuple[int, int]) -> Tuple[float, float]:
    """Parabolic refinement of an integer peak along each axis, in (-0.5, 0.5)."""
    n = values.shape[0]
    i, j = peak
    out = []
    for before, centre, after in (
        (values[(i - 1) % n, j], values[i, j], values[(i + 1) % n, j]),
        (values[i, (j - 1) % n], values[i, j], values[i, (j + 1) % n]),
    ):
        denom = before - 2.0 * centre + after
        delta = 0.5 * (before - after) / denom if denom < 0 else 0.0
        out.append(float(np.clip(delta, -0.5, 0.5)))
    return out[0], out[1]


def clip_box(box: BoundingBox, frame_shape) -> BoundingBox:
    h, w = frame_shape[:2]
    if box.x >= 0 and box.y >= 0 and box.x + box.w <= w and box.y + box.h <= h:
        return box
    x0, y0 = max(0.0, box.x), max(0.0, box.y)
    x1, y1 = min(float(w), box.x + box.w), min(float(h), box.y + box.h)
    if x1 - x0 < 2 or y1 - y0 < 2:
        raise InputError("box lies (almost) entirely outside the frame")
    return BoundingBox(x0, y0, x1 - x0, y1 - y0)


def _features(frame, feature_map, box: BoundingBox, cfg: TrackerConfig, grid: int,
              scale: float = 1.0):
    cx, cy = box.centre
    if cfg.external:
        if feature_map is None:
            raise InputError("external features selected but no feature map supplied")
        cell = cfg.features.cell_size
        x = crop_feature_grid(np.asarray(feature_map, dtype=np.float64),
                              (int(math.floor(cy / cell)), int(math.floor(cx / cell))), grid)
        blocks = ((0, x.shape[2]),)
    else:
        patch = crop_window(frame, (cx, cy), window_side(box, cfg) * scale, cfg.model_side)
        x, feature_blocks = concat_blocks(extract(patch, cfg.features))
        blocks = tuple(b.channel_range for b in feature_blocks)
    if cfg.normalise_features:
        x = normalise_power(x)
    return x, blocks


def normalise_power(x: np.ndarray) -> np.ndarray:
    """Scale features so that ``||x||_F^2 = C`` (mean squared value ``1/N^2``)."""
    energy = float(np.sum(x * x))
    if energy <= 0:
        return x
    return x * math.sqrt(x.shape[2] / energy)


def _label(box: BoundingBox, cfg: TrackerConfig, grid: int) -> solver.ResponseLabel:
    cell_px = _cell_pixels(box, cfg, grid)
    return solver.gaussian_label(grid, cfg.sigma_factor, (box.w / cell_px, box.h / cell_px))


# --------------------------------------------------------------------------
# tracking operations

def init(frame, box: BoundingBox, cfg: TrackerConfig, feature_map=None) -> TrackState:
    """Learn the first filter at ``box`` (no temporal anchor, no blending)."""
    if box.w < 2 or box.h < 2:
        raise InputError("initial box must be at least 2 x 2 pixels")
    box = clip_box(box, np.shape(frame))
    grid = _grid_size(box, cfg)
    x, blocks = _features(frame, feature_map, box, cfg, grid)
    reg, sel = cfg.effective()
    sol = solver.admm_solve(x, _label(box, cfg, grid), np.zeros_like(x), reg, sel, cfg.admm, blocks)
    history = (sol.filter.ravel().copy(),) if cfg.keep_history else None
    return TrackState(cfg=cfg, box=box, grid=grid, model_filter=sol.filter, prev_filter=sol.filter,
                      blocks=blocks, frame_index=1, filter_history=history, last_mask=sol.mask)


def detect(state: TrackState, frame, feature_map=None) -> Tuple[BoundingBox, ResponseMap]:
    """Locate the target in ``frame`` by the maximal correlation response."""
    cfg, grid = state.cfg, state.grid
    scales = (1.0,) if cfg.external else cfg.scale_factors
    best: Optional[ResponseMap] = None
    best_score = -np.inf
    for idx, scale in enumerate(scales):
        x, _ = _features(frame, feature_map, state.box, cfg, grid, scale)
        resp = circ_correlate(x, state.model_filter)
        flat = int(np.argmax(resp))
        value = float(resp.flat[flat])
        # a scale change has to beat the unit scale by a margin
        score = value if scale == 1.0 else value * cfg.scale_penalty
        if score > best_score:
            best_score = score
            best = ResponseMap(values=resp, peak=divmod(flat, grid), peak_value=value, scale_index=idx)
    scale = scales[best.scale_index]
    cell_px = _cell_pixels(state.box, cfg, grid) * scale
    di, dj = (signed_offset(v, grid) for v in best.peak)
    if cfg.subcell:
        fi, fj = subcell_offset(best.values, best.peak)
        di, dj = di + fi, dj + fj
    # move the corner rather than the centre so a null step is exact
    old = state.box
    w, h = old.w * scale, old.h * scale
    box = BoundingBox(old.x + dj * cell_px - (w - old.w) / 2.0,
                      old.y + di * cell_px - (h - old.h) / 2.0, w, h)
    return box, best


def learn(state: TrackState, frame, feature_map=None) -> TrackState:
    """Re-learn the filter at ``state.box`` and blend it into the model."""
    cfg, grid = state.cfg, state.grid
    x, blocks = _features(frame, feature_map, state.box, cfg, grid)
    reg, sel = cfg.effective()
    sol = solver.admm_solve(x, _label(state.box, cfg, grid), state.prev_filter, reg, sel,
                            cfg.admm, blocks)
    history = state.filter_history
    if history is not None:
        history = history + (sol.filter.ravel().copy(),)
    return replace(state,
                   model_filter=solver.model_update(sol.filter, state.model_filter, cfg.alpha),
                   prev_filter=sol.filter, frame_index=state.frame_index + 1,
                   filter_history=history, last_mask=sol.mask)


def step(state: TrackState, frame, feature_map=None) -> Tuple[TrackState, ResponseMap]:
    box, response = detect(state, frame, feature_map)
    return learn(replace(state, box=box), frame, feature_map), response


def track_sequence(frames: Iterable, init_box: BoundingBox, cfg: TrackerConfig,
                   feature_maps: Optional[Iterable] = None) -> TrackResult:
    """Track through ``frames``; the first output box is ``init_box`` itself.

    ``frames`` may yield arrays or zero-argument callables (lazy decoders);
    a decoder failure is reported as :class:`SequenceIOError` naming the frame.
    """
    maps = iter(feature_maps) if feature_maps is not None else None
    result: Optional[TrackResult] = None
    state: Optional[TrackState] = None
    for index, frame in enumerate(frames, start=1):
        if callable(frame):
            try:
                frame = frame()
            except Exception as exc:
                raise SequenceIOError(f"failed to decode frame {index}: {exc}") from exc
        fmap = next(maps) if maps is not None else None
        if callable(fmap):
            try:
                fmap = fmap()
            except Exception as exc:
                raise SequenceIOError(f"failed to load features for frame {index}: {exc}") from exc
        if state is None:
            state = init(frame, init_box, cfg, fmap)
            unit = 0 if cfg.external else cfg.scale_factors.index(1.0)
            # frame 1 has no detection, so it has no peak value
            result = TrackResult(boxes=[init_box], peak_values=[float("nan")], scale_indices=[unit])
        else:
            state, response = step(state, frame, fmap)
            result.boxes.append(state.box)
            result.peak_values.append(response.peak_value)
            result.scale_indices.append(response.scale_index)
        result.channel_masks.append(state.last_mask.channel_keep.copy())
        result.spatial_masks.append(state.last_mask.spatial_keep.copy())
    if result is None:
        raise InputError("sequence has no frames")
    if cfg.keep_history:
        result.filter_history = list(state.filter_history)
    result.final_filter = state.prev_filter
    return result


def stacked_history(history: Sequence[np.ndarray]) -> np.ndarray:
    """Columns are the vectorised learned filters, one per frame."""
    return np.stack(list(history), axis=1)
