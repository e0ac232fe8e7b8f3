"""Single-level orthonormal Haar analysis: closed forms and invariants."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mcslab import WaveletBands, detail_energy, haar_decompose, haar_reconstruct


def test_2x2_closed_forms():
    img = np.array([[1.0, 2.0], [3.0, 5.0]])
    bands = haar_decompose(img)
    a, b, c, d = 1.0, 2.0, 3.0, 5.0
    assert_allclose(bands.low, [[(a + b + c + d) / 2]], rtol=0, atol=0)
    lh, hl, hh = bands.high
    assert_allclose(lh, [[(a - b + c - d) / 2]], rtol=0, atol=0)
    assert_allclose(hl, [[(a + b - c - d) / 2]], rtol=0, atol=0)
    assert_allclose(hh, [[(a - b - c + d) / 2]], rtol=0, atol=0)


def test_round_trip_identity():
    rng = np.random.default_rng(0)
    for shape in ((2, 2), (4, 6), (16, 16), (10, 8)):
        img = rng.standard_normal(shape)
        assert_allclose(haar_reconstruct(haar_decompose(img)), img, atol=1e-10)


def test_parseval_equality():
    rng = np.random.default_rng(1)
    img = rng.standard_normal((12, 12))
    bands = haar_decompose(img)
    total = np.sum(bands.low**2) + np.sum(bands.high**2)
    assert_allclose(total, np.sum(img**2), rtol=1e-9)


def test_constant_image_has_zero_detail():
    img = np.full((8, 8), 0.625)
    bands = haar_decompose(img)
    assert np.all(bands.high == 0.0)
    assert detail_energy(img) == 0.0
    assert detail_energy(img, levels=3) == 0.0


def test_adjoint_equals_inverse():
    # Orthonormality: <W x, c> == <x, W^T c> with W^T = W^{-1}.
    rng = np.random.default_rng(2)
    x = rng.standard_normal((6, 6))
    coeffs = WaveletBands(low=rng.standard_normal((3, 3)), high=rng.standard_normal((3, 3, 3)))
    bx = haar_decompose(x)
    lhs = float(np.sum(bx.low * coeffs.low) + np.sum(bx.high * coeffs.high))
    rhs = float(np.sum(x * haar_reconstruct(coeffs)))
    assert_allclose(lhs, rhs, rtol=1e-12)


def test_detail_energy_multi_level_recursion():
    rng = np.random.default_rng(3)
    img = rng.standard_normal((16, 16))
    bands = haar_decompose(img)
    expected = float(np.sum(bands.high**2)) + detail_energy(bands.low, levels=1)
    assert_allclose(detail_energy(img, levels=2), expected, rtol=1e-12)


def test_odd_shapes_rejected():
    with pytest.raises(ValueError):
        haar_decompose(np.zeros((3, 4)))
    with pytest.raises(ValueError):
        haar_decompose(np.zeros((4, 5)))
    with pytest.raises(ValueError):
        haar_decompose(np.zeros(4))
    with pytest.raises(ValueError):
        detail_energy(np.zeros((4, 4)), levels=0)


def test_band_shape_validation():
    with pytest.raises(ValueError):
        WaveletBands(low=np.zeros((2, 2)), high=np.zeros((2, 2, 2)))
