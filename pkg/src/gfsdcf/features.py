"""Hand-crafted feature channels, FTEN tensor files and search-window crops."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .errors import ConfigError, FormatError, GeometryError, ShapeError

FEATURE_TYPES = ("intensity", "gradient_hist", "colour_names", "external")

COLOUR_NAMES = ("black", "blue", "brown", "grey", "green", "orange",
                "pink", "purple", "red", "white", "yellow")
COLOUR_PROTOTYPES = np.array([
    [0, 0, 0],
    [0, 0, 255],
    [150, 75, 0],
    [128, 128, 128],
    [0, 200, 0],
    [255, 165, 0],
    [255, 160, 200],
    [128, 0, 128],
    [255, 0, 0],
    [255, 255, 255],
    [255, 255, 0],
], dtype=np.float64)
COLOUR_TEMPERATURE = 40.0
ACHROMATIC = (0, 3, 9)  # black, grey, white

FTEN_MAGIC = b"FTEN"
FTEN_VERSION = 1
_FTEN_HEADER = struct.Struct("<4sHIII")


@dataclass(frozen=True)
class FeatureSpec:
    feature_types: Tuple[str, ...] = ("intensity", "gradient_hist", "colour_names")
    cell_size: int = 4
    orientation_bins: int = 9
    cosine_window: bool = True

    def __post_init__(self):
        types = tuple(self.feature_types)
        object.__setattr__(self, "feature_types", types)
        if not types:
            raise ConfigError("at least one feature type is required")
        unknown = [t for t in types if t not in FEATURE_TYPES]
        if unknown:
            raise ConfigError(f"unknown feature types: {unknown}")
        if "external" in types and len(types) > 1:
            raise ConfigError("external features cannot be mixed with hand-crafted ones")
        if self.cell_size < 1 or self.orientation_bins < 1:
            raise ConfigError("cell_size and orientation_bins must be positive")


@dataclass(frozen=True)
class FeatureBlock:
    tensor: np.ndarray
    type_tag: str
    channel_range: Tuple[int, int] = field(default=(0, 0))

    @property
    def n_channels(self) -> int:
        return self.tensor.shape[2]


# --------------------------------------------------------------------------
# colour names

def colour_name_probabilities(rgb, prototypes=COLOUR_PROTOTYPES, temperature=COLOUR_TEMPERATURE):
    """Softmax of ``-d^2 / (2 T^2)`` over prototype distances for each RGB row."""
    rgb = np.asarray(rgb, dtype=np.float64)
    d2 = np.sum((rgb[:, None, :] - prototypes[None, :, :]) ** 2, axis=2)
    logits = -d2 / (2.0 * temperature**2)
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    return p / p.sum(axis=1, keepdims=True)


@lru_cache(maxsize=None)
def colour_table() -> np.ndarray:
    """The shipped 32768 x 11 RGB -> colour-name probability table."""
    raw = resources.files("gfsdcf").joinpath("data/colour_names.bin").read_bytes()
    table = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    if table.size != 32768 * len(COLOUR_NAMES):
        raise FormatError("colour-name table has the wrong size")
    table = table.reshape(32768, len(COLOUR_NAMES))
    return table / table.sum(axis=1, keepdims=True)


def _gray_colour_names(gray: np.ndarray) -> np.ndarray:
    out = np.zeros(gray.shape + (len(COLOUR_NAMES),))
    levels = np.repeat(gray.reshape(-1, 1), 3, axis=1)
    probs = colour_name_probabilities(levels, COLOUR_PROTOTYPES[list(ACHROMATIC)])
    out.reshape(-1, len(COLOUR_NAMES))[:, list(ACHROMATIC)] = probs
    return out


def _pixel_colour_names(patch: np.ndarray) -> np.ndarray:
    if patch.ndim == 2:
        return _gray_colour_names(patch)
    q = np.clip(patch, 0, 255).astype(np.int64) // 8
    index = q[..., 0] + 32 * q[..., 1] + 1024 * q[..., 2]
    return colour_table()[index]


# --------------------------------------------------------------------------
# hand-crafted channels

def _to_gray(patch: np.ndarray) -> np.ndarray:
    return patch if patch.ndim == 2 else patch.mean(axis=2)


def _cell_mean(values: np.ndarray, cell: int) -> np.ndarray:
    h, w = values.shape[:2]
    shaped = values.reshape(h // cell, cell, w // cell, cell, *values.shape[2:])
    return shaped.mean(axis=(1, 3))


def image_gradients(gray: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Central differences with replicated borders: ``(d/dx, d/dy)``."""
    padded = np.pad(gray, 1, mode="edge")
    gx = 0.5 * (padded[1:-1, 2:] - padded[1:-1, :-2])
    gy = 0.5 * (padded[2:, 1:-1] - padded[:-2, 1:-1])
    return gx, gy


def gradient_histogram(gray: np.ndarray, cell: int, bins: int) -> np.ndarray:
    """Per-cell unsigned orientation histograms, L2-normalised per cell.

    Bin ``b`` is centred on angle ``b * pi / bins``; each pixel votes its
    gradient magnitude into the two nearest bins with linear weights.
    """
    gx, gy = image_gradients(gray / 255.0)
    mag = np.hypot(gx, gy)
    pos = (np.arctan2(gy, gx) % math.pi) / (math.pi / bins)
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    lo %= bins
    hi = (lo + 1) % bins
    h, w = gray.shape
    votes = np.zeros((h, w, bins))
    rows, cols = np.indices((h, w))
    np.add.at(votes, (rows, cols, lo), mag * (1.0 - frac))
    np.add.at(votes, (rows, cols, hi), mag * frac)
    hist = _cell_mean(votes, cell) * cell * cell
    norm = np.sqrt(np.sum(hist * hist, axis=2, keepdims=True))
    return np.divide(hist, norm, out=np.zeros_like(hist), where=norm > 0)


def hann_window(n: int) -> np.ndarray:
    """Separable Hann window with zero first/last rows and columns."""
    h = np.hanning(n)
    return np.outer(h, h)


def _check_patch(patch, spec: FeatureSpec) -> np.ndarray:
    arr = np.asarray(patch, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
        raise GeometryError(f"patch must be grayscale or RGB, got shape {arr.shape}")
    h, w = arr.shape[:2]
    cell = spec.cell_size
    if h != w:
        raise GeometryError(f"patch must be square, got {h}x{w}")
    if h < cell or h % cell:
        raise GeometryError(f"cell size {cell} does not divide patch side {h}")
    if h // cell < 2:
        raise GeometryError("patch yields fewer than 2 x 2 cells")
    return arr


def extract(patch, spec: FeatureSpec) -> List[FeatureBlock]:
    """Compute the feature blocks listed in ``spec`` for a square patch."""
    if "external" in spec.feature_types:
        raise ConfigError("external features are loaded with import_features, not extracted")
    arr = _check_patch(patch, spec)
    cell = spec.cell_size
    gray = _to_gray(arr)
    window = hann_window(arr.shape[0] // cell) if spec.cosine_window else None
    blocks = []
    for kind in spec.feature_types:
        if kind == "intensity":
            t = (_cell_mean(gray / 255.0, cell) - 0.5)[:, :, None]
        elif kind == "gradient_hist":
            t = gradient_histogram(gray, cell, spec.orientation_bins)
        else:
            t = _cell_mean(_pixel_colour_names(arr), cell)
        if window is not None:
            t = t * window[:, :, None]
        blocks.append(FeatureBlock(tensor=t, type_tag=kind))
    return _with_ranges(blocks)


def _with_ranges(blocks: Sequence[FeatureBlock]) -> List[FeatureBlock]:
    out, start = [], 0
    for b in blocks:
        end = start + b.n_channels
        out.append(replace(b, channel_range=(start, end)))
        start = end
    return out


def concat_blocks(blocks: Sequence[FeatureBlock]) -> Tuple[np.ndarray, List[FeatureBlock]]:
    """Concatenate along channels; returns the tensor and re-ranged blocks."""
    if not blocks:
        raise ShapeError("no feature blocks to concatenate")
    grids = {b.tensor.shape[:2] for b in blocks}
    if len(grids) != 1:
        raise ShapeError(f"feature blocks have mixed grid sizes: {sorted(grids)}")
    tensor = np.concatenate([b.tensor for b in blocks], axis=2)
    return tensor, _with_ranges(blocks)


# --------------------------------------------------------------------------
# FTEN files

def write_features(path, tensor) -> None:
    """Write an ``(N, N, C)`` tensor as FTEN (float32, channel-slowest)."""
    t = np.asarray(tensor)
    if t.ndim != 3 or t.shape[0] != t.shape[1]:
        raise ShapeError(f"FTEN tensors must be N x N x C, got {t.shape}")
    n, _, c = t.shape
    header = _FTEN_HEADER.pack(FTEN_MAGIC, FTEN_VERSION, n, n, c)
    body = np.ascontiguousarray(np.transpose(t, (2, 0, 1)), dtype="<f4").tobytes()
    Path(path).write_bytes(header + body)


def read_features(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _FTEN_HEADER.size:
        raise FormatError(f"{path}: truncated FTEN header")
    magic, version, n1, n2, c = _FTEN_HEADER.unpack_from(raw)
    if magic != FTEN_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FTEN_VERSION:
        raise FormatError(f"{path}: unsupported FTEN version {version}")
    if n1 != n2:
        raise FormatError(f"{path}: non-square grid {n1}x{n2}")
    expected = _FTEN_HEADER.size + 4 * n1 * n2 * c
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=_FTEN_HEADER.size).reshape(c, n1, n2)
    return np.transpose(data, (1, 2, 0)).astype(np.float64)


def import_features(path, expected_grid: int) -> FeatureBlock:
    """Load an FTEN file as an ``external`` block, checking its grid size."""
    tensor = read_features(path)
    if tensor.shape[0] != int(expected_grid):
        raise ShapeError(f"{path}: grid {tensor.shape[0]} does not match expected {expected_grid}")
    return FeatureBlock(tensor=tensor, type_tag="external", channel_range=(0, tensor.shape[2]))


# --------------------------------------------------------------------------
# search windows

def crop_window(frame, centre: Tuple[float, float], side: float, out_side: int) -> np.ndarray:
    """Bilinearly resample a square window of ``side`` pixels to ``out_side``.

    ``centre`` is ``(x, y)`` in pixel coordinates; samples falling outside
    the frame take the nearest edge value.
    """
    img = np.asarray(frame, dtype=np.float64)
    cx, cy = centre
    step = side / out_side
    offs = (np.arange(out_side) + 0.5) * step - side / 2.0 - 0.5
    rows, cols = np.meshgrid(cy + offs, cx + offs, indexing="ij")
    coords = np.stack([rows, cols])
    if img.ndim == 2:
        return ndimage.map_coordinates(img, coords, order=1, mode="nearest")
    return np.stack([ndimage.map_coordinates(img[:, :, ch], coords, order=1, mode="nearest")
                     for ch in range(img.shape[2])], axis=2)


def crop_feature_grid(grid: np.ndarray, centre_cell: Tuple[int, int], n: int) -> np.ndarray:
    """Cut an ``n x n`` window centred on ``centre_cell`` (row, col) from a
    frame-level feature map, replicating edge cells outside it."""
    r0 = int(centre_cell[0]) - n // 2
    c0 = int(centre_cell[1]) - n // 2
    rows = np.clip(np.arange(r0, r0 + n), 0, grid.shape[0] - 1)
    cols = np.clip(np.arange(c0, c0 + n), 0, grid.shape[1] - 1)
    return grid[np.ix_(rows, cols)]
