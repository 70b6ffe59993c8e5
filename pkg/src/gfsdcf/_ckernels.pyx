# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the solver's inner loops (see ``_kernels_py``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def solve_rank_one(xf, bf, double kappa):
    cdef double complex[:, ::1] x = np.ascontiguousarray(xf, dtype=np.complex128)
    cdef double complex[:, ::1] b = np.ascontiguousarray(bf, dtype=np.complex128)
    cdef Py_ssize_t m_bins = x.shape[0], n_ch = x.shape[1]
    out = np.empty((m_bins, n_ch), dtype=np.complex128)
    cdef double complex[:, ::1] a = out
    cdef Py_ssize_t m, c
    cdef double energy
    cdef double complex proj, coef
    with nogil:
        for m in range(m_bins):
            energy = 0.0
            proj = 0.0
            for c in range(n_ch):
                energy = energy + x[m, c].real * x[m, c].real + x[m, c].imag * x[m, c].imag
                proj = proj + x[m, c].conjugate() * b[m, c]
            coef = proj / (kappa + energy)
            for c in range(n_ch):
                a[m, c] = (b[m, c] - x[m, c] * coef) / kappa
    return out


def group_shrink(p_in, double mu, double lambda_channel, double lambda_spatial):
    cdef double[:, :, ::1] p = np.ascontiguousarray(p_in, dtype=np.float64)
    cdef Py_ssize_t n_i = p.shape[0], n_j = p.shape[1], n_k = p.shape[2]
    out = np.zeros((n_i, n_j, n_k), dtype=np.float64)
    cdef double[:, :, ::1] w = out
    cdef double[::1] chan = np.zeros(n_k, dtype=np.float64)
    cdef double[::1] tc = np.zeros(n_k, dtype=np.float64)
    cdef Py_ssize_t i, j, k
    cdef double v, s, ts, f
    with nogil:
        for i in range(n_i):
            for j in range(n_j):
                for k in range(n_k):
                    chan[k] += p[i, j, k] * p[i, j, k]
        for k in range(n_k):
            chan[k] = sqrt(chan[k])
            tc[k] = lambda_channel / (mu * chan[k]) if chan[k] > 0 else 0.0
        for i in range(n_i):
            for j in range(n_j):
                s = 0.0
                for k in range(n_k):
                    s = s + p[i, j, k] * p[i, j, k]
                if s <= 0:
                    continue
                ts = lambda_spatial / (mu * sqrt(s))
                for k in range(n_k):
                    if chan[k] <= 0:
                        continue
                    f = 1.0 - tc[k] - ts
                    if f > 0:
                        w[i, j, k] = f * p[i, j, k]
    return out
