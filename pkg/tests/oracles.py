"""Independent reference implementations used by the tests.

None of these share code with the package: transforms are direct sums,
correlation is a spatial loop, least squares is a dense design matrix.
"""
import numpy as np


def brute_dft2(t):
    """O(N^4) per-channel 2-D DFT by direct summation."""
    t = np.asarray(t, dtype=np.float64)
    squeeze = t.ndim == 2
    if squeeze:
        t = t[:, :, None]
    n = t.shape[0]
    idx = np.arange(n)
    out = np.zeros(t.shape, dtype=np.complex128)
    for u in range(n):
        for v in range(n):
            phase = np.exp(-2j * np.pi * (u * idx[:, None] + v * idx[None, :]) / n)
            out[u, v] = np.einsum("ij,ijk->k", phase, t)
    return out[:, :, 0] if squeeze else out


def brute_correlate(a, w):
    """R[u] = sum_k sum_n w_k[n] a_k[n + u] with wrap-around, by loops."""
    a = np.asarray(a, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if a.ndim == 2:
        a, w = a[:, :, None], w[:, :, None]
    n, _, c = a.shape
    out = np.zeros((n, n))
    for u0 in range(n):
        for u1 in range(n):
            s = 0.0
            for i in range(n):
                for j in range(n):
                    for k in range(c):
                        s += w[i, j, k] * a[(i + u0) % n, (j + u1) % n, k]
            out[u0, u1] = s
    return out


def design_matrix(x):
    """Dense A with (A @ w.ravel())[u] = circular correlation response at u."""
    x = np.asarray(x, dtype=np.float64)
    n, _, c = x.shape
    a = np.zeros((n * n, n * n * c))
    for u0 in range(n):
        for u1 in range(n):
            shifted = np.roll(x, shift=(-u0, -u1), axis=(0, 1))
            a[u0 * n + u1] = shifted.ravel()
    return a


def dense_ridge(x, y, lam):
    """Minimiser of ||A w - y||^2 + lam ||w||^2 (minimum-norm when lam == 0)."""
    a = design_matrix(x)
    yv = np.asarray(y, dtype=np.float64).ravel()
    if lam == 0:
        w = np.linalg.lstsq(a, yv, rcond=None)[0]
    else:
        w = np.linalg.solve(a.T @ a + lam * np.eye(a.shape[1]), a.T @ yv)
    return w.reshape(x.shape)


def direct_objective(w, x, y, w_prev, ls, lc, lt, ridge=0.0):
    """Term-by-term loop evaluation of the group-sparse objective."""
    n, _, c = w.shape
    resp = brute_correlate(x, w) if n <= 6 else (design_matrix(x) @ w.ravel()).reshape(n, n)
    value = float(np.sum((resp - y) ** 2))
    for i in range(n):
        for j in range(n):
            value += ls * np.sqrt(sum(w[i, j, k] ** 2 for k in range(c)))
    for k in range(c):
        value += lc * np.sqrt(np.sum(w[:, :, k] ** 2))
    value += lt * float(np.sum((w - w_prev) ** 2)) + ridge * float(np.sum(w * w))
    return value


def subgradient_oracle(x, y, w_prev, ls, lc, lt, steps=100_000, seed_w=None):
    """Long-run subgradient descent on the spatial objective; best value seen.

    Uses the dense design matrix so each step is a small matrix-vector
    product.  Step sizes decay as 1/sqrt(k) from 1/L.
    """
    n, _, c = x.shape
    a = design_matrix(x)
    h = 2.0 * (a.T @ a) + 2.0 * lt * np.eye(a.shape[1])
    g0 = 2.0 * (a.T @ np.asarray(y, dtype=np.float64).ravel()) + 2.0 * lt * np.asarray(w_prev).ravel()
    lip = float(np.linalg.eigvalsh(h)[-1])
    yv = np.asarray(y, dtype=np.float64).ravel()
    wp = np.asarray(w_prev, dtype=np.float64).ravel()

    def objective(v):
        t = v.reshape(n, n, c)
        r = a @ v - yv
        return (float(r @ r) + ls * float(np.sum(np.sqrt(np.sum(t * t, axis=2))))
                + lc * float(np.sum(np.sqrt(np.sum(t * t, axis=(0, 1)))))
                + lt * float(np.sum((v - wp) ** 2)))

    v = np.zeros(a.shape[1]) if seed_w is None else np.asarray(seed_w, dtype=np.float64).ravel().copy()
    best, best_v = objective(v), v.copy()
    for k in range(steps):
        t = v.reshape(n, n, c)
        sn = np.sqrt(np.sum(t * t, axis=2))
        cn = np.sqrt(np.sum(t * t, axis=(0, 1)))
        g = h @ v - g0
        g += ls * np.where(sn[:, :, None] > 0, t / np.where(sn > 0, sn, 1.0)[:, :, None], 0.0).ravel()
        g += lc * np.where(cn > 0, t / np.where(cn > 0, cn, 1.0), 0.0).ravel()
        v = v - g / (lip * np.sqrt(1.0 + k / 1000.0))
        if k % 10 == 0:
            f = objective(v)
            if f < best:
                best, best_v = f, v.copy()
    return best, best_v.reshape(n, n, c)


def grid_prox(p, mu, lam, lo=-4.0, hi=4.0, step=1e-4):
    """Grid minimiser of mu/2 (v - p)^2 + lam |v|."""
    v = np.arange(lo, hi + step / 2, step)
    return float(v[np.argmin(0.5 * mu * (v - p) ** 2 + lam * np.abs(v))])


def direct_histogram(gray, cell, bins):
    """Per-pixel orientation histogram with linear bin split, by loops."""
    g = np.asarray(gray, dtype=np.float64)
    h, w = g.shape
    pad = np.pad(g, 1, mode="edge")
    out = np.zeros((h // cell, w // cell, bins))
    for r in range(h):
        for c in range(w):
            gx = (pad[r + 1, c + 2] - pad[r + 1, c]) / 2.0
            gy = (pad[r + 2, c + 1] - pad[r, c + 1]) / 2.0
            mag = np.hypot(gx, gy)
            theta = np.arctan2(gy, gx) % np.pi
            pos = theta / (np.pi / bins)
            lo = int(np.floor(pos)) % bins
            frac = pos - np.floor(pos)
            out[r // cell, c // cell, lo] += mag * (1 - frac)
            out[r // cell, c // cell, (lo + 1) % bins] += mag * frac
    norms = np.sqrt(np.sum(out * out, axis=2, keepdims=True))
    return np.where(norms > 0, out / np.where(norms > 0, norms, 1.0), 0.0)
