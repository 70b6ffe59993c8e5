"""Pure-numpy kernels; reference behaviour for the compiled ``_ckernels``."""
import numpy as np


def solve_rank_one(xf, bf, kappa):
    """Solve ``(x x^H + kappa I) a = b`` independently for every row.

    ``xf`` and ``bf`` are ``(M, C)`` complex arrays (one row per frequency
    bin); uses the Sherman-Morrison form of the inverse.
    """
    xf = np.ascontiguousarray(xf, dtype=np.complex128)
    bf = np.ascontiguousarray(bf, dtype=np.complex128)
    energy = np.einsum("mc,mc->m", xf.conj(), xf).real
    proj = np.einsum("mc,mc->m", xf.conj(), bf)
    return (bf - xf * (proj / (kappa + energy))[:, None]) / kappa


def group_shrink(p, mu, lambda_channel, lambda_spatial):
    p = np.ascontiguousarray(p, dtype=np.float64)
    chan = np.sqrt(np.einsum("ijk,ijk->k", p, p))
    spat = np.sqrt(np.einsum("ijk,ijk->ij", p, p))
    with np.errstate(divide="ignore", invalid="ignore"):
        tc = np.where(chan > 0, lambda_channel / (mu * chan), 0.0)
        ts = np.where(spat > 0, lambda_spatial / (mu * spat), 0.0)
    factor = 1.0 - tc[None, None, :] - ts[:, :, None]
    factor = np.where((chan[None, None, :] > 0) & (spat[:, :, None] > 0), factor, 0.0)
    return np.maximum(factor, 0.0) * p
