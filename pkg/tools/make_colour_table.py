"""Regenerate ``src/gfsdcf/data/colour_names.bin``.

Each of the 32x32x32 quantised RGB cells gets a probability vector over the
eleven basic colour names, computed as a softmax of negative squared RGB
distance from the cell centre to a prototype colour per name.

Record index: ``r // 8 + 32 * (g // 8) + 1024 * (b // 8)``; each record is
11 little-endian float32 values in ``COLOUR_NAMES`` order.
"""
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
from gfsdcf.features import COLOUR_NAMES, COLOUR_PROTOTYPES, COLOUR_TEMPERATURE, colour_name_probabilities  # noqa: E402


def build_table():
    centres = np.arange(32) * 8 + 3.5
    b, g, r = np.meshgrid(centres, centres, centres, indexing="ij")
    rgb = np.stack([r.ravel(), g.ravel(), b.ravel()], axis=1)
    return colour_name_probabilities(rgb, COLOUR_PROTOTYPES, COLOUR_TEMPERATURE)


def main():
    out = pathlib.Path(__file__).resolve().parents[1] / "src" / "gfsdcf" / "data" / "colour_names.bin"
    table = build_table().astype("<f4")
    assert table.shape == (32768, len(COLOUR_NAMES))
    out.write_bytes(table.tobytes())
    print(f"wrote {out} ({out.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
