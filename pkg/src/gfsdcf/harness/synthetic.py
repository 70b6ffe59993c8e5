"""Synthetic sequences with exact ground truth.

Objects are rendered analytically at sub-pixel positions.  When
``informative_channels`` / ``noise_channels`` are set, every frame also gets
a frame-level feature map (one cell per ``feature_cell`` pixels):
informative channels carry a fixed random template of the object at its
current position plus noise, noise channels are i.i.d. Gaussian noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from ..errors import SpecError
from ..tracker import BoundingBox


@dataclass(frozen=True)
class SyntheticSpec:
    name: str = "synthetic"
    frame_width: int = 128
    frame_height: int = 128
    n_frames: int = 50
    object: str = "blob"
    object_size: float = 16.0
    motion: str = "linear"
    start_x: Optional[float] = None
    start_y: Optional[float] = None
    velocity_x: float = 1.0
    velocity_y: float = 0.0
    amplitude_x: float = 0.0
    amplitude_y: float = 0.0
    period: float = 50.0
    noise_sigma: float = 0.0
    background: float = 40.0
    foreground: float = 220.0
    clutter: float = 0.0
    informative_channels: int = 0
    noise_channels: int = 0
    feature_cell: int = 4
    feature_noise: float = 0.2
    noise_channel_sigma: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.object not in ("blob", "square"):
            raise SpecError(f"object must be 'blob' or 'square', got {self.object!r}")
        if self.motion not in ("linear", "sinusoidal"):
            raise SpecError(f"motion must be 'linear' or 'sinusoidal', got {self.motion!r}")
        if self.n_frames < 1 or self.object_size <= 0 or self.frame_width < 8 or self.frame_height < 8:
            raise SpecError("n_frames, object_size and frame size must be positive")
        if self.period <= 0 or self.noise_sigma < 0:
            raise SpecError("period must be positive and noise_sigma non-negative")
        if self.informative_channels < 0 or self.noise_channels < 0:
            raise SpecError("channel counts must be non-negative")
        if self.has_features:
            if self.frame_width != self.frame_height:
                raise SpecError("feature maps require square frames")
            if self.frame_width % self.feature_cell:
                raise SpecError("feature_cell must divide the frame size")

    @property
    def has_features(self) -> bool:
        return self.informative_channels + self.noise_channels > 0

    @classmethod
    def field_names(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def centre(self, t: int) -> Tuple[float, float]:
        """Object centre at 0-based frame ``t``."""
        x0 = self.frame_width / 2.0 if self.start_x is None else self.start_x
        y0 = self.frame_height / 2.0 if self.start_y is None else self.start_y
        if self.motion == "linear":
            return x0 + self.velocity_x * t, y0 + self.velocity_y * t
        phase = 2.0 * math.pi * t / self.period
        return x0 + self.amplitude_x * math.sin(phase), y0 + self.amplitude_y * math.sin(phase)


@dataclass
class SyntheticSequence:
    spec: SyntheticSpec
    frames: List[np.ndarray]
    boxes: List[BoundingBox]
    feature_maps: Optional[List[np.ndarray]] = None


def _check_path(spec: SyntheticSpec) -> None:
    s = spec.object_size
    for t in range(spec.n_frames):
        cx, cy = spec.centre(t)
        if (cx - 1.5 * s < 0 or cy - 1.5 * s < 0
                or cx + 1.5 * s > spec.frame_width or cy + 1.5 * s > spec.frame_height):
            raise SpecError(f"object path leaves the safe frame area at frame {t + 1}")


def _render(spec: SyntheticSpec, texture: Optional[np.ndarray], clutter: np.ndarray,
            cx: float, cy: float) -> np.ndarray:
    rows, cols = np.mgrid[0:spec.frame_height, 0:spec.frame_width].astype(np.float64)
    # pixel (r, c) covers [c, c+1) x [r, r+1); sample at its centre
    dx, dy = cols + 0.5 - cx, rows + 0.5 - cy
    s = spec.object_size
    if spec.object == "blob":
        sigma = s / 4.0
        obj = np.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma))
        return spec.background + clutter + (spec.foreground - spec.background) * obj
    inside = (np.abs(dx) <= s / 2) & (np.abs(dy) <= s / 2)
    tex = ndimage.map_coordinates(texture, [dy + s / 2 - 0.5, dx + s / 2 - 0.5], order=1, mode="nearest")
    return np.where(inside, tex, spec.background + clutter)


def _template_map(template: np.ndarray, grid: int, ccx: float, ccy: float) -> np.ndarray:
    """Place ``template`` (m x m cells) centred at cell coords (ccx, ccy)."""
    m = template.shape[0]
    rows, cols = np.mgrid[0:grid, 0:grid].astype(np.float64)
    u = rows + 0.5 - ccy + m / 2 - 0.5
    v = cols + 0.5 - ccx + m / 2 - 0.5
    return ndimage.map_coordinates(template, [u, v], order=1, mode="constant", cval=0.0)


def generate_synthetic(spec: SyntheticSpec) -> SyntheticSequence:
    """Deterministically render ``spec`` (frames are uint8 grayscale)."""
    _check_path(spec)
    rng = np.random.default_rng(spec.seed)
    size = int(math.ceil(spec.object_size))
    texture = None
    if spec.object == "square":
        coarse = rng.uniform(spec.background + 30, spec.foreground, size=(max(2, size // 4),) * 2)
        texture = ndimage.zoom(coarse, size / coarse.shape[0], order=1)
    clutter = np.zeros((spec.frame_height, spec.frame_width))
    if spec.clutter > 0:
        clutter = ndimage.gaussian_filter(rng.standard_normal(clutter.shape), 2.0)
        clutter *= spec.clutter / max(float(clutter.std()), 1e-12)

    templates = []
    grid = spec.frame_width // spec.feature_cell
    if spec.has_features:
        m = max(2, int(round(spec.object_size / spec.feature_cell)))
        for _ in range(spec.informative_channels):
            templates.append(ndimage.gaussian_filter(rng.standard_normal((m, m)), 0.7) * 2.0)

    frames, boxes, maps = [], [], []
    for t in range(spec.n_frames):
        cx, cy = spec.centre(t)
        img = _render(spec, texture, clutter, cx, cy)
        if spec.noise_sigma > 0:
            img = img + rng.normal(0.0, spec.noise_sigma, size=img.shape)
        frames.append(np.clip(np.rint(img), 0, 255).astype(np.uint8))
        s = spec.object_size
        boxes.append(BoundingBox(cx - s / 2.0, cy - s / 2.0, s, s))
        if spec.has_features:
            chans = []
            ccx, ccy = cx / spec.feature_cell, cy / spec.feature_cell
            for tpl in templates:
                chans.append(_template_map(tpl, grid, ccx, ccy)
                             + rng.normal(0.0, spec.feature_noise, size=(grid, grid)))
            for _ in range(spec.noise_channels):
                chans.append(rng.normal(0.0, spec.noise_channel_sigma, size=(grid, grid)))
            maps.append(np.stack(chans, axis=2).astype(np.float32).astype(np.float64))
    return SyntheticSequence(spec=spec, frames=frames, boxes=boxes,
                             feature_maps=maps if spec.has_features else None)


SUITE_SEEDS = (0, 1, 2, 3, 4)


def suite_spec(seed: int, n_frames: int = 60) -> SyntheticSpec:
    """One member of the bundled suite: object, path and noise vary with ``seed``."""
    rng = np.random.default_rng(1000 + seed)
    speed = rng.uniform(0.5, 1.0)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return SyntheticSpec(
        name=f"suite-{seed}", frame_width=160, frame_height=160, n_frames=n_frames,
        object="square" if seed % 2 else "blob", object_size=16.0,
        start_x=80.0 - 0.5 * speed * n_frames * math.cos(angle),
        start_y=80.0 - 0.5 * speed * n_frames * math.sin(angle),
        velocity_x=speed * math.cos(angle), velocity_y=speed * math.sin(angle),
        noise_sigma=4.0, seed=seed)


def bundled_suite(seeds=SUITE_SEEDS, n_frames: int = 60) -> List[SyntheticSequence]:
    return [generate_synthetic(suite_spec(s, n_frames)) for s in seeds]
