import numpy as np
import pytest

from gfsdcf.errors import NumericInputError, ShapeError, SymmetryError
from gfsdcf.tensor import circ_correlate, dft2, idft2, per_frequency_vectors

from oracles import brute_correlate, brute_dft2


def test_dft_of_ones_is_dc_only():
    f = dft2(np.ones((4, 4, 1)))
    expected = np.zeros((4, 4, 1), dtype=complex)
    expected[0, 0, 0] = 16
    np.testing.assert_allclose(f, expected, atol=1e-12)


def test_dft_of_delta_is_flat():
    x = np.zeros((4, 4, 1))
    x[0, 0, 0] = 1
    np.testing.assert_allclose(dft2(x), np.ones((4, 4, 1)), atol=1e-12)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_dft_matches_direct_summation(n):
    x = np.random.default_rng(n).standard_normal((n, n, 2))
    np.testing.assert_allclose(dft2(x), brute_dft2(x), atol=1e-10, rtol=0)


def test_dft_rejects_non_finite():
    x = np.zeros((4, 4, 1))
    x[1, 2, 0] = np.nan
    with pytest.raises(NumericInputError):
        dft2(x)


def test_dft_rejects_non_square():
    with pytest.raises(ShapeError):
        dft2(np.zeros((4, 5, 1)))


def test_round_trip():
    x = np.random.default_rng(1).standard_normal((8, 8, 3))
    assert np.max(np.abs(idft2(dft2(x)) - x)) < 1e-10


def test_inverse_of_dc_spectrum():
    spec = np.zeros((4, 4, 1), dtype=complex)
    spec[0, 0, 0] = 16
    np.testing.assert_allclose(idft2(spec), np.ones((4, 4, 1)), atol=1e-12)


def test_asymmetric_spectrum_is_rejected():
    spec = dft2(np.random.default_rng(2).standard_normal((4, 4, 2)))
    spec[1, 2, 0] += 1e-3 * np.max(np.abs(spec))
    with pytest.raises(SymmetryError):
        idft2(spec)


def test_tiny_asymmetry_is_discarded():
    spec = dft2(np.random.default_rng(3).standard_normal((4, 4, 1)))
    spec[1, 2, 0] += 1e-12j
    out = idft2(spec)
    assert out.dtype == np.float64


def test_delta_filter_returns_channel_sum():
    a = np.random.default_rng(4).standard_normal((5, 5, 3))
    w = np.zeros_like(a)
    w[0, 0, :] = 1.0
    np.testing.assert_allclose(circ_correlate(a, w), a.sum(axis=2), atol=1e-12)


def test_autocorrelation_peaks_at_zero_lag():
    n = 8
    d = (np.arange(n) + n // 2) % n - n // 2
    bump = np.exp(-(d[:, None] ** 2 + d[None, :] ** 2) / 4.0)
    resp = circ_correlate(bump, bump)
    assert np.unravel_index(np.argmax(resp), resp.shape) == (0, 0)


@pytest.mark.parametrize("shape", [(4, 4, 2), (3, 3, 1), (6, 6, 4)])
def test_correlation_matches_spatial_loop(shape):
    rng = np.random.default_rng(sum(shape))
    a, w = rng.standard_normal(shape), rng.standard_normal(shape)
    np.testing.assert_allclose(circ_correlate(a, w), brute_correlate(a, w), atol=1e-9)


def test_correlation_shape_mismatch():
    with pytest.raises(ShapeError):
        circ_correlate(np.zeros((4, 4, 2)), np.zeros((4, 4, 3)))


def test_frequency_vectors_enumerate_lexicographically():
    t = np.arange(12.0).reshape(2, 2, 3)
    got = [(i, j, v.copy()) for i, j, v in per_frequency_vectors(t)]
    assert [(i, j) for i, j, _ in got] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert all(len(v) == 3 for _, _, v in got)


def test_frequency_vectors_write_back_identity():
    t = np.random.default_rng(5).standard_normal((3, 3, 2))
    before = t.copy()
    for _, _, v in per_frequency_vectors(t):
        v[:] = v.copy()
    assert before.tobytes() == t.tobytes()


def test_frequency_vectors_of_constant_channels():
    consts = np.array([1.5, -2.0, 7.0])
    t = np.broadcast_to(consts, (3, 3, 3)).copy()
    for _, _, v in per_frequency_vectors(t):
        np.testing.assert_array_equal(v, consts)
