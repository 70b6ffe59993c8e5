"""OTB-style sequence directories.

A sequence directory holds numbered frames (``0001.pgm`` ...) either at its
top level or under ``img/``, a ``groundtruth_rect.txt`` with one
``x,y,w,h`` line per frame in 1-indexed pixel coordinates, and optionally a
``features/`` directory of per-frame FTEN tensors with matching stems.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from ..errors import ConsistencyError, ParseError, SequenceIOError
from ..features import read_features, write_features
from ..tracker import BoundingBox

GT_NAME = "groundtruth_rect.txt"
IMAGE_SUFFIXES = (".pgm", ".ppm", ".png", ".jpg", ".jpeg", ".bmp")
NETPBM_SUFFIXES = (".pgm", ".ppm")

_NUMBER = re.compile(r"(\d+)")


@dataclass
class SequenceSpec:
    name: str
    source: object  # directory path or SyntheticSpec


@dataclass
class LoadedSequence:
    spec: SequenceSpec
    frames: List[Callable[[], np.ndarray]]
    boxes: List[BoundingBox]
    feature_maps: Optional[List[Callable[[], np.ndarray]]] = None
    frame_paths: Optional[List[Path]] = None


# --------------------------------------------------------------------------
# ground truth

def parse_groundtruth(text: str) -> List[BoundingBox]:
    """Parse OTB ground truth; 1-indexed coordinates become 0-indexed."""
    boxes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p for p in re.split(r"[,\t ]+", line) if p]
        if len(parts) != 4:
            raise ParseError(f"expected 4 values, found {len(parts)}", lineno)
        try:
            x, y, w, h = (float(p) for p in parts)
        except ValueError:
            raise ParseError(f"non-numeric value in {line!r}", lineno) from None
        if not (w > 0 and h > 0) or not all(np.isfinite([x, y, w, h])):
            raise ParseError(f"box must have finite values and positive size: {line!r}", lineno)
        boxes.append(BoundingBox(x - 1.0, y - 1.0, w, h))
    return boxes


def format_groundtruth(boxes: Sequence[BoundingBox]) -> str:
    return "".join(f"{b.x + 1.0:.6g},{b.y + 1.0:.6g},{b.w:.6g},{b.h:.6g}\n" for b in boxes)


# --------------------------------------------------------------------------
# images

def _netpbm_tokens(data: bytes, count: int):
    """Read ``count`` header tokens, skipping ``#`` comments; return tokens and data offset."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ValueError("truncated header")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos + 1  # exactly one whitespace byte before the raster


def decode_netpbm(data: bytes) -> np.ndarray:
    """Decode binary PGM (P5) or PPM (P6), 8 or 16 bit."""
    tokens, offset = _netpbm_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported netpbm magic {magic!r}")
    width, height, maxval = (int(t) for t in tokens[1:])
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ValueError("invalid netpbm dimensions")
    channels = 1 if magic == b"P5" else 3
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    expected = width * height * channels * dtype.itemsize
    raster = data[offset:offset + expected]
    if len(raster) != expected:
        raise ValueError("truncated raster")
    img = np.frombuffer(raster, dtype=dtype).reshape(height, width, channels)
    if maxval != 255:
        img = np.rint(img.astype(np.float64) * (255.0 / maxval)).astype(np.uint8)
    return img[:, :, 0] if channels == 1 else img


def encode_netpbm(image: np.ndarray) -> bytes:
    img = np.asarray(image, dtype=np.uint8)
    if img.ndim == 2:
        header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n"
    elif img.ndim == 3 and img.shape[2] == 3:
        header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n"
    else:
        raise ValueError(f"cannot encode image of shape {img.shape}")
    return header.encode("ascii") + np.ascontiguousarray(img).tobytes()


def read_image(path) -> np.ndarray:
    """Decode one frame to uint8 (H x W gray or H x W x 3 RGB)."""
    path = Path(path)
    try:
        if path.suffix.lower() in NETPBM_SUFFIXES:
            return decode_netpbm(path.read_bytes())
        from PIL import Image

        with Image.open(path) as im:
            mode = "L" if im.mode in ("L", "I", "I;16", "1") else "RGB"
            return np.asarray(im.convert(mode), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise SequenceIOError(f"cannot decode {path}: {exc}") from exc


def write_image(path, image: np.ndarray) -> None:
    Path(path).write_bytes(encode_netpbm(image))


# --------------------------------------------------------------------------
# sequences

def _sort_key(path: Path):
    nums = _NUMBER.findall(path.stem)
    return (int(nums[-1]) if nums else -1, path.name)


def _image_files(directory: Path) -> List[Path]:
    for candidate in (directory / "img", directory):
        if candidate.is_dir():
            files = [p for p in candidate.iterdir()
                     if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES]
            if files:
                return sorted(files, key=_sort_key)
    return []


def _lazy(loader, path: Path) -> Callable[[], np.ndarray]:
    return lambda: loader(path)


def load_sequence(directory: Union[str, Path]) -> LoadedSequence:
    """Load an OTB-style directory; frames decode lazily in filename order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise SequenceIOError(f"sequence directory not found: {directory}")
    gt_path = directory / GT_NAME
    if not gt_path.is_file():
        raise SequenceIOError(f"missing {GT_NAME} in {directory}")
    try:
        text = gt_path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise SequenceIOError(f"cannot read {gt_path}: {exc}") from exc
    boxes = parse_groundtruth(text)
    images = _image_files(directory)
    if not images:
        raise SequenceIOError(f"no images found in {directory}")
    if len(images) != len(boxes):
        raise ConsistencyError(f"{len(images)} images but {len(boxes)} ground-truth boxes")

    feature_maps = None
    feat_dir = directory / "features"
    if feat_dir.is_dir():
        feats = sorted(feat_dir.glob("*.ften"), key=_sort_key)
        if len(feats) != len(images):
            raise ConsistencyError(f"{len(images)} images but {len(feats)} feature files")
        feature_maps = [_lazy(read_features, p) for p in feats]
    return LoadedSequence(spec=SequenceSpec(name=directory.name, source=directory),
                          frames=[_lazy(read_image, p) for p in images], boxes=boxes,
                          feature_maps=feature_maps, frame_paths=images)


def write_sequence(directory: Union[str, Path], frames: Sequence[np.ndarray],
                   boxes: Sequence[BoundingBox],
                   feature_maps: Optional[Sequence[np.ndarray]] = None) -> Path:
    """Write frames as ``img/NNNN.pgm`` (or ``.ppm``), ground truth and FTEN features."""
    directory = Path(directory)
    if len(frames) != len(boxes):
        raise ConsistencyError(f"{len(frames)} frames but {len(boxes)} boxes")
    img_dir = directory / "img"
    try:
        img_dir.mkdir(parents=True, exist_ok=True)
        width = max(4, len(str(len(frames))))
        for i, frame in enumerate(frames, start=1):
            suffix = ".pgm" if np.ndim(frame) == 2 else ".ppm"
            write_image(img_dir / f"{i:0{width}d}{suffix}", frame)
        (directory / GT_NAME).write_text(format_groundtruth(boxes), encoding="utf-8")
        if feature_maps is not None:
            feat_dir = directory / "features"
            feat_dir.mkdir(exist_ok=True)
            for i, fmap in enumerate(feature_maps, start=1):
                write_features(feat_dir / f"{i:0{width}d}.ften", fmap)
    except OSError as exc:
        raise SequenceIOError(f"cannot write sequence to {directory}: {exc}") from exc
    return directory
