import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis.extra.numpy import arrays
import hypothesis.strategies as st

from quatern.imaging import (PSNR_CAP, ImageFormatError, csv_psnr, gaussian_blur, gaussian_kernel, psnr,
                             read_mask, read_pgm, read_ppm, ssim, write_mask, write_pgm, write_ppm)

levels = st.integers(0, 255).map(lambda v: v / 255.0)


@given(arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9), st.just(3)), elements=levels))
def test_ppm_round_trip(rgb):
    import tempfile
    from pathlib import Path
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "x.ppm"
        write_ppm(p, rgb)
        assert np.array_equal(read_ppm(p), rgb)


def test_pgm_round_trip_and_bytes(tmp_path):
    g = np.array([[0.0, 1.0], [128 / 255, 3 / 255]])
    write_pgm(tmp_path / "g.pgm", g)
    raw = (tmp_path / "g.pgm").read_bytes()
    assert raw == b"P5\n2 2\n255\n" + bytes([0, 255, 128, 3])
    assert np.array_equal(read_pgm(tmp_path / "g.pgm"), g)


def test_reader_accepts_comments_and_16bit(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n2 1\n65535\n" + np.array([0, 65535], ">u2").tobytes())
    assert np.array_equal(read_pgm(p), [[0.0, 1.0]])


def test_mask_round_trip(tmp_path):
    m = np.array([[1, 0, 1], [0, 0, 1]], dtype=float)
    write_mask(tmp_path / "m.pgm", m)
    assert (tmp_path / "m.pgm").read_bytes()[-6:] == bytes([255, 0, 255, 0, 0, 255])
    assert np.array_equal(read_mask(tmp_path / "m.pgm"), m)


@pytest.mark.parametrize("payload", [
    b"P3\n1 1\n255\n0 0 0\n",
    b"P6\n1 1\n255\n\x00",
    b"P6\n1 x\n255\n\x00\x00\x00",
    b"P6\n0 1\n255\n",
    b"P6\n1",
])
def test_bad_ppm(tmp_path, payload):
    p = tmp_path / "bad.ppm"
    p.write_bytes(payload)
    with pytest.raises(ImageFormatError):
        read_ppm(p)


def test_write_rejects_wrong_shape(tmp_path):
    with pytest.raises(ImageFormatError):
        write_ppm(tmp_path / "x.ppm", np.zeros((2, 2)))
    with pytest.raises(ImageFormatError):
        write_pgm(tmp_path / "x.pgm", np.zeros((2, 2, 3)))


def test_failed_write_leaves_nothing(tmp_path):
    with pytest.raises(Exception):
        write_ppm(tmp_path / "missing_dir" / "x.ppm", np.zeros((1, 1, 3)))
    assert list(tmp_path.iterdir()) == []


def test_kernel_by_hand():
    k = gaussian_kernel(0.5)
    raw = np.exp(-np.array([4.0, 1.0, 0.0, 1.0, 4.0]) / (2 * 0.25))
    assert k.size == 5
    assert np.allclose(k, raw / raw.sum(), rtol=1e-15)


def test_kernel_rejects_nonpositive():
    with pytest.raises(ValueError):
        gaussian_kernel(0.0)


def test_impulse_center_weight():
    img = np.zeros((9, 9))
    img[4, 4] = 1.0
    k = gaussian_kernel(0.5)
    out = gaussian_blur(img, 0.5)
    assert out[4, 4] == pytest.approx(k[2] ** 2, rel=1e-14)


def test_constant_image_unchanged():
    img = np.full((7, 5), 0.3)
    assert np.abs(gaussian_blur(img, 1.3) - img).max() <= 1e-12


def test_sum_preserved_interior():
    rng = np.random.default_rng(0)
    img = np.zeros((20, 20))
    img[6:14, 6:14] = rng.uniform(size=(8, 8))
    assert gaussian_blur(img, 0.5).sum() == pytest.approx(img.sum(), abs=1e-9)


def test_psnr_values():
    assert psnr(np.zeros((4, 4, 3)), np.ones((4, 4, 3))) == 0.0
    assert psnr(np.full((2, 2), 0.1), np.zeros((2, 2))) == pytest.approx(20.0)
    assert psnr(np.ones(3), np.ones(3)) == math.inf
    assert csv_psnr(math.inf) == PSNR_CAP and csv_psnr(31.5) == 31.5
    with pytest.raises(ValueError):
        psnr(np.ones(3), np.ones(4))


def test_ssim_identical_is_one():
    x = np.random.default_rng(1).uniform(size=(16, 16, 3))
    assert ssim(x, x) == 1.0


def test_ssim_orders_degradation():
    rng = np.random.default_rng(2)
    x = gaussian_blur(rng.uniform(size=(32, 32)), 2.0)
    a = np.clip(x + 0.01 * rng.standard_normal(x.shape), 0, 1)
    b = np.clip(x + 0.2 * rng.standard_normal(x.shape), 0, 1)
    assert 1.0 > ssim(a, x) > ssim(b, x) > -1.0


def test_ssim_shape_mismatch():
    with pytest.raises(ValueError):
        ssim(np.zeros((8, 8)), np.zeros((8, 9)))


@given(arrays(np.float64, (10, 10), elements=st.floats(0, 1)), arrays(np.float64, (10, 10), elements=st.floats(0, 1)))
def test_ssim_bounded_and_symmetric(x, y):
    s = ssim(x, y)
    assert -1.0 - 1e-12 <= s <= 1.0 + 1e-12
    assert s == pytest.approx(ssim(y, x), abs=1e-12)
