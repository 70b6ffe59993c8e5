"""Numerical substrate: per-channel 2-D DFTs and circular correlation.

Tensors are plain ``numpy`` arrays laid out as ``(N, N, C)`` (rows, columns,
channels) in float64 / complex128.  Two-dimensional ``(N, N)`` arrays are
accepted wherever a single-channel map makes sense and are returned in the
same rank.
"""
from __future__ import annotations

from typing import Iterator, Tuple

import numpy as np

from .errors import NumericInputError, ShapeError, SymmetryError

SYMMETRY_RTOL = 1e-9


def as_real_tensor(t, name="tensor") -> np.ndarray:
    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ShapeError(f"{name} must be N x N or N x N x C, got shape {arr.shape}")
    if arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
        raise ShapeError(f"{name} must be a square grid with N >= 2, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericInputError(f"{name} contains non-finite values")
    return arr


def dft2(t) -> np.ndarray:
    """Unnormalised forward 2-D DFT of every channel."""
    arr = as_real_tensor(t)
    return np.fft.fft2(arr, axes=(0, 1))


def reflect_index(t: np.ndarray) -> np.ndarray:
    """Return ``t[(-i) mod N, (-j) mod N, ...]``."""
    return np.roll(np.flip(t, axis=(0, 1)), shift=(1, 1), axis=(0, 1))


def symmetry_defect(spectrum: np.ndarray) -> float:
    """Relative deviation of ``spectrum`` from conjugate symmetry."""
    scale = float(np.max(np.abs(spectrum))) if spectrum.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(spectrum - np.conj(reflect_index(spectrum))))) / scale


def idft2(t, check_symmetry: bool = True) -> np.ndarray:
    """Inverse of :func:`dft2` (``1/N^2`` normalisation), returning real data.

    Raises :class:`SymmetryError` when the spectrum is not the transform of a
    real signal to within ``SYMMETRY_RTOL``.
    """
    spec = np.asarray(t, dtype=np.complex128)
    if spec.ndim not in (2, 3) or spec.shape[0] != spec.shape[1]:
        raise ShapeError(f"spectrum must be N x N or N x N x C, got {spec.shape}")
    if not np.all(np.isfinite(spec)):
        raise NumericInputError("spectrum contains non-finite values")
    if check_symmetry:
        defect = symmetry_defect(spec)
        if defect > SYMMETRY_RTOL:
            raise SymmetryError(f"spectrum is not conjugate symmetric (relative defect {defect:.3e})")
    return np.fft.ifft2(spec, axes=(0, 1)).real


def _check_same_shape(a: np.ndarray, w: np.ndarray) -> None:
    if a.shape != w.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {w.shape}")


def correlate_spectra(af: np.ndarray, wf: np.ndarray) -> np.ndarray:
    """Channel-summed ``conj(W) * A`` in the frequency domain."""
    if af.ndim == 2:
        return np.conj(wf) * af
    return np.einsum("ijk,ijk->ij", np.conj(wf), af)


def circ_correlate(a, w) -> np.ndarray:
    """Channel-summed circular cross-correlation ``R[u] = sum_n w[n] a[n + u]``.

    Computed as ``idft2(sum_k conj(W_k) * A_k)``; the filter is the conjugated
    operand, so a filter equal to the features responds at zero lag.
    """
    a = as_real_tensor(a, "features")
    w = as_real_tensor(w, "filter")
    _check_same_shape(a, w)
    return idft2(correlate_spectra(dft2(a), dft2(w)), check_symmetry=False)


def per_frequency_vectors(t: np.ndarray) -> Iterator[Tuple[int, int, np.ndarray]]:
    """Yield ``(i, j, t[i, j, :])`` in lexicographic order.

    The yielded vectors are views, so in-place writes land in ``t``.
    """
    n_rows, n_cols = t.shape[:2]
    for i in range(n_rows):
        for j in range(n_cols):
            yield i, j, t[i, j]
