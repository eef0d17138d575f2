import numpy as np
import pytest

from rhseg.errors import DimensionMismatch
from rhseg.image import HyperImage


def make_image(edge=4, bands=2, seed=0):
    rng = np.random.default_rng(seed)
    samples = rng.normal(size=(bands, edge, edge)).astype(np.float32)
    return HyperImage(edge, edge, bands, samples)


def test_shape_and_counts():
    img = make_image(5, 3)
    assert img.pixel_count == 25
    assert img.edge == 5
    assert img.samples.shape == (3, 5, 5)


def test_non_square_rejected():
    with pytest.raises(DimensionMismatch):
        HyperImage(4, 3, 1, np.zeros((1, 3, 4), dtype=np.float32))


def test_pixel_matrix_layout():
    img = make_image(3, 2)
    mat = img.pixel_matrix()
    assert mat.shape == (9, 2)
    assert mat.dtype == np.float64
    # row-major pixel order, band columns
    y, x = 1, 2
    p = y * img.width + x
    for b in range(img.bands):
        assert mat[p, b] == float(img.samples[b, y, x])


def test_pixel_vector_promotes():
    img = make_image(2, 3)
    vec = img.pixel_vector(1, 0)
    assert vec.dtype == np.float64
    assert np.array_equal(vec, img.samples[:, 1, 0].astype(np.float64))


def test_subimage_copies():
    img = make_image(6, 2)
    sub = img.subimage(2, 1, 3)
    assert (sub.width, sub.height) == (3, 3)
    assert np.array_equal(sub.samples, img.samples[:, 2:5, 1:4])
    sub.samples[0, 0, 0] = 999.0
    assert img.samples[0, 2, 1] != 999.0


def test_drop_bands():
    img = make_image(3, 4)
    out = img.drop_bands([1, 3])
    assert out.bands == 2
    assert np.array_equal(out.samples[0], img.samples[0])
    assert np.array_equal(out.samples[1], img.samples[2])
    with pytest.raises(DimensionMismatch):
        img.drop_bands(range(4))


def test_crop():
    img = make_image(6, 1)
    out = img.crop(1, 2, 3, 3)
    assert np.array_equal(out.samples, img.samples[:, 2:5, 1:4])
    with pytest.raises(DimensionMismatch):
        img.crop(0, 0, 3, 2)  # not square
    with pytest.raises(DimensionMismatch):
        img.crop(4, 4, 3, 3)  # out of bounds


def test_flat_samples_reshaped():
    flat = np.arange(18, dtype=np.float32)
    img = HyperImage(3, 3, 2, flat)
    assert img.samples.shape == (2, 3, 3)
    assert img.samples[1, 2, 2] == 17.0


def test_bad_sample_count_rejected():
    with pytest.raises(DimensionMismatch):
        HyperImage(3, 3, 2, np.zeros((2, 3, 4), dtype=np.float32))
