"""Correlation-filter learning: ridge closed form and the group-sparse ADMM solver.

Conventions
-----------
Features ``x`` and filters ``w`` are ``(N, N, C)`` float64 arrays.  The
filter's response on features is the channel-summed circular correlation
``R = idft2(sum_k conj(W_k) * X_k)`` (:func:`gfsdcf.tensor.circ_correlate`).
Every objective below is written in the spatial domain; the per-frequency
systems are derived from it with Parseval's identity, so the ``1/N^2``
factors cancel and each bin solves

    (x x^H + kappa I) a = b

with ``x`` the bin's cross-channel feature vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .errors import ConfigError, DivergenceError, ShapeError, SingularityError
from .tensor import as_real_tensor, circ_correlate, dft2, idft2

ChannelRange = Tuple[int, int]


# --------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class RegularisationConfig:
    """Weights of the regularisers.

    ``lambda_spatial`` multiplies the sum of per-location cross-channel norms,
    ``lambda_channel`` the sum of per-channel Frobenius norms, and
    ``lambda_temporal`` the squared distance to the previous frame's filter
    (applied once).  ``ridge_lambda`` is the plain ``||W||^2`` weight; it is
    what the closed-form baseline uses and is also added to the ADMM filter
    subproblem (default 0).
    """

    lambda_spatial: float = 0.1
    lambda_channel: float = 1.0
    lambda_temporal: float = 16.0
    ridge_lambda: float = 0.0

    def __post_init__(self):
        for name in ("lambda_spatial", "lambda_channel", "lambda_temporal", "ridge_lambda"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be a finite non-negative number, got {value!r}")


@dataclass(frozen=True)
class SelectionConfig:
    channel_ratio: float = 0.9
    spatial_ratio: float = 0.1
    per_block: bool = True

    def __post_init__(self):
        for name in ("channel_ratio", "spatial_ratio"):
            value = getattr(self, name)
            if not (0 < value <= 1):
                raise ConfigError(f"{name} must lie in (0, 1], got {value!r}")


@dataclass(frozen=True)
class AdmmConfig:
    mu_init: float = 1.0
    mu_growth: float = 1.05
    mu_max: float = 100.0
    max_iters: int = 50
    tol_primal: float = 1e-5
    tol_change: float = 1e-5

    def __post_init__(self):
        if not self.mu_init > 0 or not self.mu_max > 0:
            raise ConfigError("mu_init and mu_max must be positive")
        if self.mu_init > self.mu_max:
            raise ConfigError("mu_init must not exceed mu_max")
        if not self.mu_growth >= 1:
            raise ConfigError("mu_growth must be >= 1")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError("max_iters must be a positive integer")
        if not (self.tol_primal > 0 and self.tol_change > 0):
            raise ConfigError("tolerances must be positive")


# --------------------------------------------------------------------------
# value types

@dataclass(frozen=True)
class ResponseLabel:
    spatial: np.ndarray
    spectrum: np.ndarray

    @property
    def n(self) -> int:
        return self.spatial.shape[0]


@dataclass(frozen=True)
class SelectionMask:
    channel_keep: np.ndarray
    spatial_keep: np.ndarray

    def as_tensor_mask(self) -> np.ndarray:
        return self.spatial_keep[:, :, None] & self.channel_keep[None, None, :]


@dataclass
class GfsSolution:
    filter: np.ndarray
    mask: SelectionMask
    iterations_used: int
    primal_residual: float
    objective_trace: List[float] = field(default_factory=list)
    converged: bool = False


# --------------------------------------------------------------------------
# label and baseline

def gaussian_label(n: int, sigma_factor: float, target_cells: Tuple[float, float]) -> ResponseLabel:
    """Gaussian response label with its peak (value 1) at the grid origin.

    ``sigma = sigma_factor * sqrt(w * h)`` with ``(w, h)`` the target size in
    feature cells; distances wrap around the grid.
    """
    if not sigma_factor > 0:
        raise ConfigError("sigma_factor must be positive")
    n = int(n)
    if n < 2:
        raise ShapeError("label grid must have N >= 2")
    tw, th = target_cells
    sigma = sigma_factor * math.sqrt(float(tw) * float(th))
    if not sigma > 0:
        raise ConfigError("target size must be positive")
    offsets = (np.arange(n) + n // 2) % n - n // 2
    d2 = offsets[:, None] ** 2 + offsets[None, :] ** 2
    y = np.exp(-0.5 * d2 / sigma**2)
    return ResponseLabel(spatial=y, spectrum=np.fft.fft2(y))


def _label_arrays(y) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(y, ResponseLabel):
        return y.spatial, y.spectrum
    ys = as_real_tensor(y, "label")
    if ys.ndim != 2:
        raise ShapeError("label must be an N x N matrix")
    return ys, np.fft.fft2(ys)


def dcf_closed_form(x, y, ridge_lambda: float) -> np.ndarray:
    """Minimise ``||sum_k corr(X_k, W_k) - Y||^2 + ridge * sum_k ||W_k||^2`` exactly.

    Each frequency bin's ``C x C`` system is rank one plus a multiple of the
    identity, so the solution is ``x conj(y) / (x^H x + ridge)``.
    """
    x = as_real_tensor(x, "features")
    if x.ndim == 2:
        x = x[:, :, None]
    ys, yf = _label_arrays(y)
    if ys.shape != x.shape[:2]:
        raise ShapeError(f"label shape {ys.shape} does not match features {x.shape[:2]}")
    if ridge_lambda < 0:
        raise ConfigError("ridge_lambda must be non-negative")
    xf = dft2(x)
    energy = np.einsum("ijk,ijk->ij", xf.conj(), xf).real
    if ridge_lambda == 0 and np.any(energy <= 1e-13 * max(float(energy.max()), 1e-300)):
        raise SingularityError("a frequency bin has no feature energy and ridge_lambda is 0")
    wf = xf * (np.conj(yf) / (energy + ridge_lambda))[:, :, None]
    return idft2(wf, check_symmetry=False)


# --------------------------------------------------------------------------
# group attributes and pruning

def spatial_group_attributes(w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    return np.sqrt(np.einsum("ijk,ijk->ij", w, w))


def channel_group_attributes(w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    return np.sqrt(np.einsum("ijk,ijk->k", w, w))


def kept_count(ratio: float, size: int) -> int:
    """``round(ratio * size)`` with halves rounded up, never below one."""
    return min(size, max(1, int(math.floor(ratio * size + 0.5))))


def prune_by_ratio(attrs, ratio: float) -> np.ndarray:
    """Boolean mask keeping the ``round(ratio * len)`` largest attributes.

    Ties go to the lower flat index.  Works on vectors and matrices alike.
    """
    if not 0 < ratio <= 1:
        raise ConfigError(f"ratio must lie in (0, 1], got {ratio!r}")
    attrs = np.asarray(attrs, dtype=np.float64)
    flat = attrs.ravel()
    keep = np.zeros(flat.size, dtype=bool)
    order = np.argsort(-flat, kind="stable")
    keep[order[: kept_count(ratio, flat.size)]] = True
    return keep.reshape(attrs.shape)


def group_shrink(p, mu: float, lambda_channel: float, lambda_spatial: float) -> np.ndarray:
    """Joint channel/spatial group shrinkage of ``p``.

    Each entry is scaled by
    ``max(0, 1 - lambda_channel / (mu ||P_k||_F) - lambda_spatial / (mu ||p_ij||))``;
    entries of zero-norm groups stay zero.
    """
    if not mu > 0:
        raise ConfigError("mu must be positive")
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 3:
        raise ShapeError("group_shrink expects an N x N x C tensor")
    return kernels.group_shrink(p, float(mu), float(lambda_channel), float(lambda_spatial))


def _normalise_blocks(blocks: Optional[Sequence[ChannelRange]], n_channels: int) -> List[ChannelRange]:
    if not blocks:
        return [(0, n_channels)]
    out = [(int(a), int(b)) for a, b in blocks]
    pos = 0
    for a, b in out:
        if a != pos or b <= a:
            raise ShapeError(f"channel blocks must tile [0, {n_channels}) without gaps: {out}")
        pos = b
    if pos != n_channels:
        raise ShapeError(f"channel blocks cover {pos} channels, tensor has {n_channels}")
    return out


def select_groups(w: np.ndarray, sel: SelectionConfig,
                  blocks: Optional[Sequence[ChannelRange]] = None) -> SelectionMask:
    """Channel mask (per block when ``sel.per_block``) and global spatial mask."""
    n_channels = w.shape[2]
    chan_attr = channel_group_attributes(w)
    channel_keep = np.zeros(n_channels, dtype=bool)
    ranges = _normalise_blocks(blocks, n_channels) if sel.per_block else [(0, n_channels)]
    for a, b in ranges:
        channel_keep[a:b] = prune_by_ratio(chan_attr[a:b], sel.channel_ratio)
    spatial_keep = prune_by_ratio(spatial_group_attributes(w), sel.spatial_ratio)
    return SelectionMask(channel_keep=channel_keep, spatial_keep=spatial_keep)


# --------------------------------------------------------------------------
# objective and ADMM

def objective_value(w, x, y, w_prev, reg: RegularisationConfig) -> float:
    """Full spatial-domain objective of the group-sparse filter problem."""
    w = np.asarray(w, dtype=np.float64)
    ys, _ = _label_arrays(y)
    resid = circ_correlate(x, w) - ys
    diff = w - np.asarray(w_prev, dtype=np.float64)
    value = float(np.sum(resid * resid))
    value += reg.lambda_spatial * float(np.sum(spatial_group_attributes(w)))
    value += reg.lambda_channel * float(np.sum(channel_group_attributes(w)))
    value += reg.lambda_temporal * float(np.sum(diff * diff))
    if reg.ridge_lambda:
        value += reg.ridge_lambda * float(np.sum(w * w))
    return value


def _half_weights(n: int) -> np.ndarray:
    """Parseval weights of an ``rfft2`` half spectrum, flattened row-major.

    Columns ``0`` and (for even ``n``) ``n / 2`` are their own mirror
    images; every other column stands for itself and its conjugate twin.
    """
    cols = n // 2 + 1
    wcol = np.full(cols, 2.0)
    wcol[0] = 1.0
    if n % 2 == 0:
        wcol[-1] = 1.0
    return np.broadcast_to(wcol, (n, cols)).ravel() / float(n * n)


def _objective_from_spectra(wf, w, xf, yf, w_prev, reg, weights) -> float:
    rf = np.einsum("mc,mc->m", wf.conj(), xf) - yf
    value = float(np.dot(weights, rf.real**2 + rf.imag**2))
    value += reg.lambda_spatial * float(np.sum(spatial_group_attributes(w)))
    value += reg.lambda_channel * float(np.sum(channel_group_attributes(w)))
    diff = w - w_prev
    value += reg.lambda_temporal * float(np.sum(diff * diff))
    if reg.ridge_lambda:
        value += reg.ridge_lambda * float(np.sum(w * w))
    return value


def _check_divergence(trace: List[float], reference: float, window: int = 10,
                      rtol: float = 1e-6, blowup: float = 10.0) -> None:
    """Raise when the objective is non-finite, or when it rose by more than
    ``rtol`` (relative) on each of the last ``window`` iterations and now
    exceeds ``blowup`` times the objective at the initialisation point.

    Rises alone are normal while the penalty grows (the shrunk iterate
    leaves zero and overshoots before settling), so they must also end
    far above the starting objective to count as divergence.
    """
    if not math.isfinite(trace[-1]):
        raise DivergenceError("objective became non-finite", trace)
    if len(trace) <= window or trace[-1] <= blowup * max(reference, 1e-300):
        return
    recent = trace[-(window + 1):]
    if all(b > a + rtol * max(abs(a), 1e-12) for a, b in zip(recent, recent[1:])):
        raise DivergenceError(f"objective increased for {window} consecutive iterations", trace)


def admm_solve(x, y, w_prev, reg: RegularisationConfig, sel: SelectionConfig,
               admm: AdmmConfig, blocks: Optional[Sequence[ChannelRange]] = None) -> GfsSolution:
    """Learn a group-sparse, temporally anchored filter by ADMM.

    Splits ``W = W'`` and alternates: a per-frequency ridge-type solve for
    ``W`` (data term, temporal anchor and augmented penalty), the joint group
    shrinkage for ``W'``, the scaled dual step and the penalty growth.  After
    the iterations the channel and spatial masks are taken from the group
    attributes of ``W'`` and the pruned ``W'`` is returned.
    """
    x = as_real_tensor(x, "features")
    if x.ndim == 2:
        x = x[:, :, None]
    n, _, n_channels = x.shape
    ys, _ = _label_arrays(y)
    if ys.shape != (n, n):
        raise ShapeError(f"label shape {ys.shape} does not match features {x.shape}")
    w_prev = np.asarray(w_prev, dtype=np.float64)
    if w_prev.shape != x.shape:
        raise ShapeError(f"previous filter shape {w_prev.shape} does not match features {x.shape}")
    blocks = _normalise_blocks(blocks, n_channels)

    # real inputs: work on rfft2 half spectra, the bins are independent
    cols = n // 2 + 1
    m = n * cols
    weights = _half_weights(n)

    def fwd(t):
        return np.fft.rfft2(t, axes=(0, 1)).reshape(m, n_channels)

    def inv(tf):
        return np.fft.irfft2(tf.reshape(n, cols, n_channels), s=(n, n), axes=(0, 1))

    xf = fwd(x)
    yf = np.fft.rfft2(ys).reshape(m)
    wpf = fwd(w_prev)
    rhs_fixed = xf * np.conj(yf)[:, None] + reg.lambda_temporal * wpf

    start = _objective_from_spectra(wpf, w_prev, xf, yf, w_prev, reg, weights)
    w = w_prev.copy()
    w_slack = w_prev.copy()
    slack_f = wpf
    gamma = np.zeros_like(w)
    gamma_f = np.zeros_like(wpf)
    mu = admm.mu_init
    trace: List[float] = []
    residual = math.inf
    converged = False
    it = 0
    for it in range(1, int(admm.max_iters) + 1):
        kappa = reg.ridge_lambda + reg.lambda_temporal + 0.5 * mu
        wf = kernels.solve_rank_one(xf, rhs_fixed + 0.5 * mu * slack_f - 0.5 * gamma_f, kappa)
        w_old = w
        w = inv(wf)
        w_slack = kernels.group_shrink(w + gamma / mu, mu, reg.lambda_channel, reg.lambda_spatial)
        slack_f = fwd(w_slack)
        gamma = gamma + mu * (w - w_slack)
        gamma_f = gamma_f + mu * (wf - slack_f)

        scale = max(float(np.linalg.norm(w)), 1.0)
        residual = float(np.linalg.norm(w - w_slack)) / scale
        change = float(np.linalg.norm(w - w_old)) / scale
        trace.append(_objective_from_spectra(slack_f, w_slack, xf, yf, w_prev, reg, weights))
        _check_divergence(trace, start)
        mu = min(admm.mu_growth * mu, admm.mu_max)
        if residual <= admm.tol_primal and change <= admm.tol_change:
            converged = True
            break

    mask = select_groups(w_slack, sel, blocks)
    filt = np.where(mask.as_tensor_mask(), w_slack, 0.0)
    return GfsSolution(filter=filt, mask=mask, iterations_used=it, primal_residual=residual,
                       objective_trace=trace, converged=converged)


def model_update(w_new, w_model, alpha: float) -> np.ndarray:
    """Running-average model ``alpha * w_new + (1 - alpha) * w_model``."""
    if not 0 <= alpha <= 1:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha!r}")
    w_new = np.asarray(w_new, dtype=np.float64)
    w_model = np.asarray(w_model, dtype=np.float64)
    if w_new.shape != w_model.shape:
        raise ShapeError(f"shape mismatch: {w_new.shape} vs {w_model.shape}")
    if alpha == 1:
        return w_new.copy()
    if alpha == 0:
        return w_model.copy()
    return alpha * w_new + (1 - alpha) * w_model
