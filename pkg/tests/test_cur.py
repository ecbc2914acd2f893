import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from conftest import low_rank, rand_q
from quatern.cur import (CUR_BACKENDS, BackendError, CurConfig, QuatImage, cur_factor, cur_reconstruct,
                         final_psnr, impute_reconstruct, missing_psnr, planted_low_rank, random_mask,
                         relative_error, select_indices)
from quatern.qcore import QMat, ShapeError, fro_dist, frobenius, mat_mul


def test_config_validation():
    for kw in (dict(rank=0), dict(iters=0), dict(backend="svd"), dict(u_mode="best"),
               dict(selection="leverage"), dict(gaussian_sigma=0.0)):
        with pytest.raises(ValueError):
            CurConfig(**kw)


def test_quat_image_invariants():
    rgb = np.random.default_rng(0).uniform(size=(3, 4, 3))
    img = QuatImage.from_rgb(rgb)
    assert (img.height, img.width) == (3, 4)
    assert np.array_equal(img.rgb(), rgb)
    assert np.all(img.pixels.s == 0.0)
    with pytest.raises(ValueError):
        QuatImage(QMat(np.ones((2, 2, 4))))
    with pytest.raises(ValueError):
        QuatImage.from_rgb(rgb + 1.0)
    with pytest.raises(ShapeError):
        QuatImage.from_rgb(np.zeros((2, 2)))


@pytest.mark.parametrize("backend", CUR_BACKENDS)
def test_exact_rank_recovery(backend, rng):
    a = low_rank(rng, 12, 10, 3)
    c, u, r = cur_factor(a, [0, 4, 7], [1, 5, 8], "opt", CurConfig(rank=3, backend=backend))
    assert c.shape == (12, 3) and u.shape == (3, 3) and r.shape == (3, 10)
    assert fro_dist(mat_mul(mat_mul(c, u), r), a) <= 1e-8 * frobenius(a)


def test_cross_recovers_exact_rank(rng):
    a = low_rank(rng, 9, 8, 2)
    x = cur_reconstruct(a, [1, 6], [0, 3], "cross", CurConfig(rank=2))
    assert fro_dist(x, a) <= 1e-8 * frobenius(a)


def test_full_selection_modes_agree():
    a = QMat.from_components(np.diag([1.0, 2.0, 3.0]))
    idx = [0, 1, 2]
    u1 = cur_factor(a, idx, idx, "opt")[1]
    u2 = cur_factor(a, idx, idx, "cross")[1]
    assert fro_dist(u1, u2) <= 1e-10


def test_rank_one_outer_product(rng):
    a = mat_mul(rand_q(rng, 7, 1), rand_q(rng, 1, 5))
    for mode in ("opt", "cross"):
        assert fro_dist(cur_reconstruct(a, [3], [2], mode), a) <= 1e-10 * frobenius(a)


def test_index_errors(rng):
    a = rand_q(rng, 4, 4)
    with pytest.raises(IndexError):
        cur_factor(a, [0, 4], [0, 1])
    with pytest.raises(ValueError):
        cur_factor(a, [1, 1], [0, 1])
    with pytest.raises(ValueError):
        cur_factor(a, [0, 1], [0])
    with pytest.raises(ValueError):
        cur_factor(a, [0], [0], "both")


def test_backend_failure_has_context(rng):
    a = low_rank(rng, 10, 10, 4)
    cfg = CurConfig(rank=4, backend="qns", pinv_max_iters=1)
    with pytest.raises(BackendError, match="qns failed on C"):
        cur_factor(a, [0, 1, 2, 3], [0, 1, 2, 3], "opt", cfg)


def test_select_indices():
    rng = np.random.default_rng(0)
    i, j = select_indices(10, 6, 4, rng)
    assert i.size == j.size == 4 and np.unique(i).size == 4 and j.max() < 6
    with pytest.raises(ValueError):
        select_indices(3, 5, 4, rng)
    w = (np.array([0, 0, 1.0, 1.0, 0]), np.array([1.0, 1.0, 0, 0]))
    i, j = select_indices(5, 4, 2, rng, w)
    assert list(i) == [2, 3] and list(j) == [0, 1]


@given(st.integers(2, 12), st.integers(2, 12), st.floats(0.0, 0.95), st.integers(0, 100))
def test_random_mask_count(m, n, frac, seed):
    mask = random_mask((m, n), frac, seed)
    assert set(np.unique(mask)) <= {0.0, 1.0}
    assert int((mask == 0).sum()) == int(round(frac * m * n))
    assert np.array_equal(mask, random_mask((m, n), frac, seed))


def test_random_mask_rejects():
    with pytest.raises(ValueError):
        random_mask((3, 3), 1.0)


def test_planted_image():
    img = planted_low_rank(20, 16, 3, seed=4)
    assert img.pixels.data[..., 1:].max() == 1.0 and img.pixels.data[..., 1:].min() >= 0.0
    c = np.concatenate([img.pixels.data[..., k] for k in range(1, 4)], axis=1)
    assert np.linalg.matrix_rank(c, tol=1e-10) == 3


def test_no_missing_returns_input():
    img = planted_low_rank(12, 10, 2)
    out, hist = impute_reconstruct(img, np.ones((12, 10)), CurConfig(rank=3, iters=1), truth=img)
    assert np.array_equal(out.pixels.data, img.pixels.data)
    assert hist.psnr == [float("inf")]


def test_mask_fidelity_and_history():
    truth = planted_low_rank(24, 20, 3, seed=1)
    mask = random_mask((24, 20), 0.4, seed=2)
    observed = QuatImage(QMat(truth.pixels.data * mask[..., None]))
    out, hist = impute_reconstruct(observed, mask, CurConfig(rank=6, iters=5, gaussian_sigma=0.5), truth)
    keep = mask == 1.0
    assert np.array_equal(out.pixels.data[keep], truth.pixels.data[keep])
    assert len(hist.psnr) == len(hist.ssim) == len(hist.rel_change) == len(hist.scalar_leak) == 5
    assert [t for t, _, _ in hist.rows()] == [1, 2, 3, 4, 5]
    assert np.all(out.pixels.s == 0.0)


def test_mask_shape_and_values_checked():
    img = planted_low_rank(8, 8, 2)
    with pytest.raises(ShapeError):
        impute_reconstruct(img, np.ones((8, 7)), CurConfig(rank=2, iters=1))
    with pytest.raises(ValueError):
        impute_reconstruct(img, np.full((8, 8), 0.5), CurConfig(rank=2, iters=1))


def small_problem(**kw):
    truth = planted_low_rank(30, 24, 3, seed=3)
    mask = random_mask((30, 24), 0.5, seed=1)
    observed = QuatImage(QMat(truth.pixels.data * mask[..., None]))
    cfg = CurConfig(**{"rank": 6, "iters": 25, "redraw": True, **kw})
    return truth, mask, observed, cfg


def test_recovery_improves_over_zero_fill():
    truth, mask, observed, cfg = small_problem()
    out, hist = impute_reconstruct(observed, mask, cfg, truth)
    assert relative_error(out, truth) <= 5e-2
    assert final_psnr(hist) > missing_psnr(observed, mask, truth) + 10.0


@settings(max_examples=5)
@given(st.sampled_from(["qns", "qsai", "qrapid", "qhpi19"]))
def test_backends_agree_with_qsvd(backend):
    truth, mask, observed, cfg = small_problem(iters=10)
    ref, h_ref = impute_reconstruct(observed, mask, cfg, truth)
    out, h = impute_reconstruct(observed, mask, dataclasses.replace(cfg, backend=backend), truth)
    assert abs(final_psnr(h) - final_psnr(h_ref)) <= 0.5


def test_energy_selection_runs():
    truth, mask, observed, cfg = small_problem(selection="energy", iters=5)
    out, hist = impute_reconstruct(observed, mask, cfg, truth)
    assert np.isfinite(final_psnr(hist))


def test_seeded_determinism():
    truth, mask, observed, cfg = small_problem(iters=4)
    a, _ = impute_reconstruct(observed, mask, cfg)
    b, _ = impute_reconstruct(observed, mask, cfg)
    assert a.pixels.data.tobytes() == b.pixels.data.tobytes()
