import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given

from conftest import qmats, rand_q
from quatern.qcore import (EmbeddingError, I_, J_, K_, ONE, MulCounter, QMat, Quat, QmatFormatError,
                           ShapeError, adjoint, embed, fro_dist, frobenius, hadamard, identity, inner,
                           mat_mul, quat_mul, read_qmat, real_mask_apply, unembed, write_qmat)

EPS = np.finfo(float).eps


def test_unit_table():
    assert quat_mul(I_, J_) == K_
    assert quat_mul(J_, I_) == Quat(0, 0, 0, -1)
    assert quat_mul(J_, K_) == I_
    assert quat_mul(K_, I_) == J_
    for u in (I_, J_, K_):
        assert quat_mul(u, u) == Quat(-1.0)
    assert quat_mul(quat_mul(I_, J_), K_) == Quat(-1.0)


def test_one_plus_i_times_one_plus_j():
    assert quat_mul(Quat(1, 1), Quat(1, 0, 1)) == Quat(1, 1, 1, 1)


quats = st.builds(Quat, *(st.floats(-5, 5, allow_nan=False) for _ in range(4)))


@given(quats)
def test_conjugate_product_is_real_norm(q):
    p = quat_mul(q.conj(), q)
    n2 = q.s ** 2 + q.x ** 2 + q.y ** 2 + q.z ** 2
    assert abs(p.s - n2) <= 1e-12 * (1 + n2)
    assert max(abs(p.x), abs(p.y), abs(p.z)) <= 1e-12 * (1 + n2)


@given(quats, quats, quats)
def test_associative(a, b, c):
    l = quat_mul(quat_mul(a, b), c)
    r = quat_mul(a, quat_mul(b, c))
    scale = 1 + a.norm() * b.norm() * c.norm()
    assert np.max(np.abs(l.as_array() - r.as_array())) <= 1e-12 * scale


def test_noncommutative_witness():
    a = QMat.from_components([[0.0]], [[1.0]])
    b = QMat.from_components([[0.0]], None, [[1.0]])
    assert fro_dist(a @ b, b @ a) > 1


def test_identity_and_zero(rng):
    a = rand_q(rng, 3, 3)
    assert np.array_equal((identity(3) @ a).data, a.data)
    assert frobenius(a @ QMat.zeros(3, 2)) == 0.0


def test_matmul_shape_error(rng):
    with pytest.raises(ShapeError, match="3x2.*3x3"):
        mat_mul(rand_q(rng, 3, 2), rand_q(rng, 3, 3))


def test_matmul_matches_entrywise_hamilton(rng):
    a, b = rand_q(rng, 2, 3), rand_q(rng, 3, 2)
    c = a @ b
    for r in range(2):
        for k in range(2):
            acc = Quat()
            for t in range(3):
                acc = acc + quat_mul(a.entry(r, t), b.entry(t, k))
            assert np.allclose(c.data[r, k], acc.as_array(), atol=1e-13)


def test_matmul_matches_embedding_oracle(rng):
    a, b = rand_q(rng, 3, 3), rand_q(rng, 3, 3)
    via = unembed(embed(a) @ embed(b))
    assert fro_dist(a @ b, via) <= 1e-13 * frobenius(a) * frobenius(b)


@given(qmats(rows=8, cols=8), qmats(rows=8, cols=8))
def test_homomorphism(a, b):
    lhs = embed(a @ b)
    rhs = embed(a) @ embed(b)
    # the float error of one product is bounded by a small multiple of n * eps
    assert np.linalg.norm(lhs - rhs) <= 10 * 8 * EPS * frobenius(a) * frobenius(b) + 1e-300


@given(qmats())
def test_norm_transport(a):
    assert math.isclose(frobenius(a) * math.sqrt(2), np.linalg.norm(embed(a)), rel_tol=10 * EPS, abs_tol=1e-300)


@given(qmats())
def test_adjoint_involution_exact(a):
    assert np.array_equal(adjoint(adjoint(a)).data, a.data)


@given(qmats(rows=4, cols=4), qmats(rows=4, cols=4))
def test_adjoint_reverses_products(a, b):
    assert fro_dist(adjoint(a @ b), adjoint(b) @ adjoint(a)) <= 1e-12 * (1 + frobenius(a) * frobenius(b))


@given(qmats())
def test_embed_adjoint_is_conjugate_transpose(a):
    assert np.allclose(embed(adjoint(a)), embed(a).conj().T, atol=0)


@given(qmats())
def test_unembed_round_trip(a):
    assert np.array_equal(unembed(embed(a)).data, a.data)


def test_embed_units():
    assert np.array_equal(embed(QMat.from_components([[1.0]])), np.eye(2))
    assert np.array_equal(embed(QMat.from_components([[0.0]], [[1.0]])), np.diag([1j, -1j]))
    assert np.array_equal(embed(QMat.from_components([[0.0]], None, [[1.0]])), np.array([[0, 1], [-1, 0]]))
    assert unembed(np.eye(2)).entry(0, 0) == ONE


def test_unembed_rejects_broken_structure():
    c = np.eye(2, dtype=complex)
    c[1, 1] += 1.0
    with pytest.raises(EmbeddingError) as err:
        unembed(c)
    assert err.value.deviation == pytest.approx(1.0)


def test_adjoint_of_i():
    a = QMat.from_components([[0.0]], [[1.0]])
    assert adjoint(a).entry(0, 0) == Quat(0, -1)


def test_frobenius_identity():
    assert frobenius(identity(2)) == pytest.approx(math.sqrt(2))


def test_inner_is_real_trace(rng):
    a, b = rand_q(rng, 3, 2), rand_q(rng, 3, 2)
    tr = sum((adjoint(a) @ b).data[i, i, 0] for i in range(2))
    assert inner(a, b) == pytest.approx(tr)


def test_hadamard_with_ones(rng):
    a = rand_q(rng, 3, 4)
    ones = QMat.from_components(np.ones((3, 4)))
    assert np.array_equal(hadamard(a, ones).data, a.data)


def test_real_mask_apply(rng):
    m, x = rand_q(rng, 3, 3), rand_q(rng, 3, 3)
    assert np.array_equal(real_mask_apply(np.ones((3, 3)), m, x).data, m.data)
    assert np.array_equal(real_mask_apply(np.zeros((3, 3)), m, x).data, x.data)
    with pytest.raises(ShapeError):
        real_mask_apply(np.ones((2, 3)), m, x)


def test_counter_counts_products(rng):
    c = MulCounter()
    a = rand_q(rng, 2, 2)
    c.mul(a, a)
    c.mul(a, a)
    assert c.count == 2


def test_qmat_is_immutable(rng):
    a = rand_q(rng, 2, 2)
    with pytest.raises(ValueError):
        a.data[0, 0, 0] = 1.0


@given(qmats())
def test_qmat_file_round_trip(tmp_path_factory, a):
    p = tmp_path_factory.mktemp("q") / "a.qmat"
    write_qmat(p, a)
    assert np.array_equal(read_qmat(p).data, a.data)


def test_qmat_reader_errors(tmp_path):
    p = tmp_path / "bad.qmat"
    p.write_text("QMAT v1 2 1\n1 0 0 0\n")
    with pytest.raises(QmatFormatError) as err:
        read_qmat(p)
    assert err.value.line is not None
    p.write_text("QMAT v1 1 1\n1 0 zero 0\n")
    with pytest.raises(QmatFormatError, match="line 2"):
        read_qmat(p)
    p.write_text("MATRIX 1 1\n")
    with pytest.raises(QmatFormatError, match="line 1"):
        read_qmat(p)
