import os
import subprocess
import sys

import numpy as np
import pytest

from gfsdcf import _kernels_py, kernels

BACKENDS = kernels.backends()


def _rank_one_inputs(seed, m=30, c=5):
    rng = np.random.default_rng(seed)
    xf = rng.standard_normal((m, c)) + 1j * rng.standard_normal((m, c))
    bf = rng.standard_normal((m, c)) + 1j * rng.standard_normal((m, c))
    return xf, bf


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_rank_one_solves_the_system(name):
    xf, bf = _rank_one_inputs(0)
    kappa = 0.7
    out = BACKENDS[name].solve_rank_one(xf, bf, kappa)
    for i in range(xf.shape[0]):
        a = np.outer(xf[i], np.conj(xf[i])) + kappa * np.eye(xf.shape[1])
        np.testing.assert_allclose(a @ out[i], bf[i], atol=1e-10)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_shrink_zero_input(name):
    out = BACKENDS[name].group_shrink(np.zeros((4, 4, 3)), 2.0, 1.0, 1.0)
    assert not np.any(out) and np.all(np.isfinite(out))


def test_backends_agree():
    if "cython" not in BACKENDS:
        pytest.skip("compiled extension not built")
    c, py = BACKENDS["cython"], BACKENDS["python"]
    for seed in range(5):
        xf, bf = _rank_one_inputs(seed, m=17 * 9, c=7)
        np.testing.assert_allclose(c.solve_rank_one(xf, bf, 1.3), py.solve_rank_one(xf, bf, 1.3),
                                   rtol=1e-12, atol=1e-13)
        p = np.random.default_rng(seed).standard_normal((9, 9, 7))
        p[:, :, 2] = 0
        for lc, ls in ((0.0, 0.0), (0.5, 0.1), (50.0, 50.0)):
            np.testing.assert_allclose(c.group_shrink(p, 3.0, lc, ls), py.group_shrink(p, 3.0, lc, ls),
                                       rtol=1e-12, atol=1e-14)


def test_active_backend_is_reported():
    assert kernels.BACKEND in BACKENDS
    assert kernels.backends()["python"] is _kernels_py


def test_environment_forces_fallback():
    env = dict(os.environ, GFSDCF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from gfsdcf import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
