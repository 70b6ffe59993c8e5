"""Diagnostics of learned filters: stacked-history rank and energy heat-maps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import InputError

RANK_TOLERANCE = 1e-3


@dataclass(frozen=True)
class RankDiagnostic:
    numerical_rank: int
    singular_values: Tuple[float, ...]
    tolerance_ratio: float

    def as_dict(self) -> dict:
        return {"numerical_rank": self.numerical_rank,
                "singular_values": list(self.singular_values),
                "tolerance_ratio": self.tolerance_ratio}


def rank_diagnostic(history, tolerance_ratio: float = RANK_TOLERANCE) -> RankDiagnostic:
    """Numerical rank of the matrix whose columns are the vectorised filters.

    ``history`` is either a sequence of filters (any shape, flattened) or an
    already stacked 2-D matrix with one filter per column.
    """
    if isinstance(history, np.ndarray) and history.ndim == 2:
        mat = np.asarray(history, dtype=np.float64)
    else:
        cols = [np.asarray(h, dtype=np.float64).ravel() for h in history]
        if not cols:
            raise InputError("rank diagnostic needs at least one filter")
        mat = np.stack(cols, axis=1)
    if mat.shape[1] == 0:
        raise InputError("rank diagnostic needs at least one filter")
    sv = np.linalg.svd(mat, compute_uv=False)
    rank = int(np.sum(sv > tolerance_ratio * sv[0])) if sv[0] > 0 else 0
    return RankDiagnostic(numerical_rank=rank, singular_values=tuple(float(s) for s in sv),
                          tolerance_ratio=float(tolerance_ratio))


def filter_energy_map(w) -> np.ndarray:
    """Per-location energy gathered across all channels (heat-map)."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim == 2:
        return w * w
    return np.sum(w * w, axis=2)


def nonzero_cells(grid: np.ndarray) -> int:
    return int(np.count_nonzero(grid))
