import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from localpower import linalg_core as L
from localpower.errors import DimMismatch, RankDeficient, ZeroMatrix
from conftest import random_psd


def triple_loop(M, Z):
    out = np.zeros((M.shape[0], Z.shape[1]))
    for i in range(M.shape[0]):
        for j in range(Z.shape[1]):
            acc = 0.0
            for l in range(M.shape[1]):
                acc += M[i, l] * Z[l, j]
            out[i, j] = acc
    return out


def random_orthonormal(rng, d, r):
    return np.linalg.qr(rng.standard_normal((d, r)))[0]


class TestGram:
    def test_identity(self):
        np.testing.assert_array_equal(L.gram(np.eye(2)), 0.5 * np.eye(2))

    def test_hand_product(self):
        np.testing.assert_allclose(L.gram([[1.0, 2.0], [3.0, 4.0]]), [[5.0, 7.0], [7.0, 10.0]], rtol=0, atol=1e-15)

    def test_zero(self):
        np.testing.assert_array_equal(L.gram(np.zeros((3, 2))), np.zeros((2, 2)))

    def test_output_is_symmetric_psd(self, rng):
        M = L.gram(rng.standard_normal((50, 8)))
        np.testing.assert_array_equal(M, M.T)
        assert np.linalg.eigvalsh(M)[0] >= -1e-10 * np.linalg.norm(M, 2)


class TestQR:
    def test_orthonormal_input_is_fixed_point(self):
        Y = np.eye(5)[:, :3]
        Q, R = L.qr_orthonormalize(Y)
        np.testing.assert_allclose(Q, Y, atol=1e-15)
        np.testing.assert_allclose(R, np.eye(3), atol=1e-15)

    def test_positive_scaling(self):
        Q, R = L.qr_orthonormalize(3.0 * np.eye(4))
        np.testing.assert_allclose(Q, np.eye(4), atol=1e-15)
        np.testing.assert_allclose(R, 3.0 * np.eye(4), atol=1e-15)

    def test_reconstruction(self):
        Y = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
        Q, R = L.qr_orthonormalize(Y)
        np.testing.assert_allclose(Q.T @ Q, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(Q @ R, Y, atol=1e-12)
        assert np.all(np.diag(R) > 0)
        assert np.all(np.tril(R, -1) == 0)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            L.qr_orthonormalize(np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]]))

    def test_random_trials(self, rng):
        for _ in range(100):
            d = int(rng.integers(2, 12))
            r = int(rng.integers(1, d + 1))
            Y = rng.standard_normal((d, r))
            Q, R = L.qr_orthonormalize(Y)
            assert np.linalg.norm(Q @ R - Y, 2) <= 1e-10 * np.linalg.norm(Y, 2)
            assert np.abs(Q.T @ Q - np.eye(r)).max() <= 1e-10

    def test_batched_matches_single(self, rng):
        Y = rng.standard_normal((4, 7, 3))
        Qb, Rb = L.batched_qr(Y)
        for i in range(4):
            Q, R = L.qr_orthonormalize(Y[i])
            np.testing.assert_allclose(Qb[i], Q, atol=1e-14)
            np.testing.assert_allclose(Rb[i], R, atol=1e-14)


class TestGramMultiply:
    def test_identity(self, rng):
        Z = rng.standard_normal((4, 2))
        np.testing.assert_array_equal(L.gram_multiply(np.eye(4), Z), Z)

    def test_diagonal(self):
        np.testing.assert_array_equal(L.gram_multiply(np.diag([2.0, 3.0]), [[1.0], [1.0]]), [[2.0], [3.0]])

    def test_triple_loop_oracle(self, rng):
        M = random_psd(rng, 5)
        Z = rng.standard_normal((5, 2))
        np.testing.assert_allclose(L.gram_multiply(M, Z), triple_loop(M, Z), rtol=0, atol=1e-13)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            L.gram_multiply(np.eye(3), np.ones((2, 1)))


class TestReferenceTopk:
    def test_diagonal(self, backend):
        U, s = L.reference_topk(np.diag([3.0, 2.0, 1.0]), 2)
        np.testing.assert_allclose(s, [3.0, 2.0, 1.0])
        assert L.sin_theta_k(np.eye(3)[:, :2], U) <= 1e-10

    def test_two_by_two(self, backend):
        U, s = L.reference_topk(np.array([[2.0, 1.0], [1.0, 2.0]]), 1)
        assert s[0] == pytest.approx(3.0, abs=1e-14)
        np.testing.assert_allclose(np.abs(U[:, 0]), [1 / math.sqrt(2)] * 2, atol=1e-14)

    def test_degenerate_spectrum_orthonormal(self, backend):
        U, s = L.reference_topk(np.eye(3), 2)
        np.testing.assert_allclose(s, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(U.T @ U, np.eye(2), atol=1e-14)

    def test_trace_and_residual(self, backend, rng):
        tol = 1e-14
        M = random_psd(rng, 15)
        U, s = L.reference_topk(M, 4, tol=tol)
        assert abs(s.sum() - np.trace(M)) <= 1e-8 * abs(np.trace(M))
        assert np.all(np.diff(s) <= 0)
        for j in range(4):
            assert np.linalg.norm(M @ U[:, j] - s[j] * U[:, j]) <= 10 * tol * np.linalg.norm(M) + 1e-13

    def test_bad_k(self):
        with pytest.raises(DimMismatch):
            L.reference_topk(np.eye(3), 4)


class TestSpectralNorm:
    def test_diag(self, backend):
        assert L.spectral_norm(np.diag([4.0, 1.0])) == pytest.approx(4.0, rel=1e-12)

    def test_zero(self):
        assert L.spectral_norm(np.zeros((3, 2))) == 0.0

    def test_against_jacobi(self, backend, rng):
        B = rng.standard_normal((6, 4))
        _, s = L.reference_topk(B.T @ B, 1)
        assert L.spectral_norm(B) == pytest.approx(math.sqrt(s[0]), rel=1e-8)

    def test_transpose_invariant(self, backend, rng):
        for _ in range(10):
            B = rng.standard_normal((int(rng.integers(1, 9)), int(rng.integers(1, 9))))
            assert L.spectral_norm(B) == pytest.approx(L.spectral_norm(B.T), rel=1e-8)


class TestAngles:
    def test_sin_identical(self, rng):
        U = random_orthonormal(rng, 6, 2)
        assert L.sin_theta_k(U, U) <= 1e-14

    def test_sin_orthogonal(self):
        assert L.sin_theta_k(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])) == 1.0

    def test_sin_closed_form(self):
        a = math.pi / 6
        assert L.sin_theta_k(np.array([[1.0], [0.0]]), np.array([[math.cos(a)], [math.sin(a)]])) == pytest.approx(0.5, abs=1e-14)

    def test_sin_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            L.sin_theta_k(np.eye(3)[:, :1], np.eye(4)[:, :1])

    def test_sin_rotation_invariant(self, rng):
        for _ in range(10):
            U = random_orthonormal(rng, 8, 2)
            Z = random_orthonormal(rng, 8, 4)
            O = random_orthonormal(rng, 4, 4)
            assert abs(L.sin_theta_k(U, Z) - L.sin_theta_k(U, Z @ O)) <= 1e-10

    def test_sin_cos_pythagoras(self, rng):
        for _ in range(10):
            U = random_orthonormal(rng, 7, 3)
            Z = random_orthonormal(rng, 7, 3)
            smin = np.linalg.svd(U.T @ Z, compute_uv=False)[-1]
            assert L.sin_theta_k(U, Z) ** 2 + smin**2 == pytest.approx(1.0, abs=1e-8)

    def test_tan_identical(self, rng):
        U = random_orthonormal(rng, 5, 2)
        assert L.tan_theta_k(U, U) <= 1e-12

    def test_tan_quarter_turn(self):
        z = np.array([[1.0], [1.0]]) / math.sqrt(2)
        assert L.tan_theta_k(np.array([[1.0], [0.0]]), z) == pytest.approx(1.0, abs=1e-14)

    def test_tan_perpendicular(self):
        assert L.tan_theta_k(np.eye(3)[:, :1], np.eye(3)[:, 1:2]) == math.inf

    def test_tan_invertible_invariance(self, rng):
        for _ in range(10):
            U = random_orthonormal(rng, 9, 3)
            Z = random_orthonormal(rng, 9, 3)
            R = rng.standard_normal((3, 3)) + 3 * np.eye(3)
            t = L.tan_theta_k(U, Z)
            assert L.tan_theta_k(U, Z @ R) == pytest.approx(t, rel=1e-8)

    def test_tan_matches_sin(self, rng):
        U = random_orthonormal(rng, 9, 3)
        Z = random_orthonormal(rng, 9, 3)
        s = L.sin_theta_k(U, Z)
        assert L.tan_theta_k(U, Z) == pytest.approx(s / math.sqrt(1 - s * s), rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.data())
def test_qr_property(d, data):
    r = data.draw(st.integers(1, d))
    seed = data.draw(st.integers(0, 2**31))
    Y = np.random.default_rng(seed).standard_normal((d, r))
    Q, R = L.qr_orthonormalize(Y)
    assert np.linalg.norm(Q @ R - Y, 2) <= 1e-10 * np.linalg.norm(Y, 2)
    assert np.all(np.diag(R) > 0)


class TestConditionAndCoherence:
    def test_identity(self):
        assert L.condition_number(np.eye(4)) == 1.0

    def test_singular_excluded(self):
        assert L.condition_number(np.diag([4.0, 2.0, 0.0])) == pytest.approx(2.0)

    def test_diag(self):
        assert L.condition_number(np.diag([10.0, 5.0, 1.0])) == pytest.approx(10.0)

    def test_zero(self):
        with pytest.raises(ZeroMatrix):
            L.condition_number(np.zeros((2, 2)))

    def test_coherence_identity(self):
        assert L.row_coherence(np.eye(6)) == pytest.approx(1.0, abs=1e-12)

    def test_coherence_single_row(self):
        A = np.zeros((7, 1))
        A[3, 0] = 2.5
        assert L.row_coherence(A) == pytest.approx(7.0)

    def test_coherence_against_svd_basis(self, rng):
        A = rng.standard_normal((100, 5))
        U = np.linalg.svd(A, full_matrices=False)[0]
        oracle = 100 / 5 * np.max(np.sum(U**2, axis=1))
        mu = L.row_coherence(A)
        assert 1.0 <= mu <= 20.0
        assert mu == pytest.approx(oracle, rel=1e-8)

    def test_coherence_rank_deficient(self, rng):
        B = rng.standard_normal((40, 2))
        A = np.hstack([B, B @ np.ones((2, 1))])
        U = np.linalg.svd(B, full_matrices=False)[0]
        assert L.row_coherence(A) == pytest.approx(40 / 2 * np.max(np.sum(U**2, axis=1)), rel=1e-8)
