import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from qdeform.operators import (
    DimensionError,
    apply_fn,
    eig_hermitian,
    exp_phi_fn,
    hermitian,
    identity_fn,
    log_exp_phi_fn,
    log_phi_fn,
    loewner2_det,
    min_eig,
    psd_order_leq,
    sqrtm_psd,
    u_minus_exp_phi_fn,
)
from qdeform.scalar import DomainError, exp_phi


def rand_herm(rng, n, scale=1.0):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (G + G.conj().T)


def rand_pos(rng, n):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return G @ G.conj().T / n + 0.1 * np.eye(n)


class TestHermitian:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            hermitian(np.ones((2, 3)))

    def test_symmetrizes_within_tolerance(self):
        A = np.array([[1.0, 2.0], [2.0 + 1e-14, 1.0]])
        H = hermitian(A)
        assert np.array_equal(H, H.conj().T)


class TestEig:
    def test_identity(self):
        es = eig_hermitian(np.eye(3))
        assert np.allclose(es.eigenvalues, 1.0)
        assert np.allclose(es.vectors.conj().T @ es.vectors, np.eye(3))

    def test_diagonal_sorted(self):
        es = eig_hermitian(np.diag([3.0, 1.0, 2.0]))
        assert list(es.eigenvalues) == [1.0, 2.0, 3.0]

    @given(st.integers(1, 12), st.integers(0, 2**32 - 1))
    def test_reconstruction(self, n, seed):
        A = rand_herm(np.random.default_rng(seed), n, 3.0)
        es = eig_hermitian(A)
        radius = np.max(np.abs(es.eigenvalues))
        assert np.max(np.abs(es.reconstruct() - A)) <= 1e-10 * (1 + radius)
        assert np.max(np.abs(es.vectors.conj().T @ es.vectors - np.eye(n))) <= 1e-10
        assert np.all(np.diff(es.eigenvalues) >= 0)

    def test_random_8x8(self):
        A = rand_herm(np.random.default_rng(0), 8)
        assert np.max(np.abs(eig_hermitian(A).reconstruct() - A)) < 1e-10


class TestApplyFn:
    def test_identity(self):
        A = rand_herm(np.random.default_rng(1), 5)
        assert np.allclose(apply_fn(A, identity_fn()), A, atol=1e-10)

    def test_exp_phi_of_zero(self):
        assert np.allclose(apply_fn(np.zeros((1, 1)), exp_phi_fn()), np.eye(1))

    def test_against_scipy_sqrtm(self):
        P = rand_pos(np.random.default_rng(2), 6)
        assert np.allclose(sqrtm_psd(P), sla.sqrtm(P), atol=1e-10)
        assert np.allclose(apply_fn(P, np.sqrt), sla.sqrtm(P), atol=1e-10)

    def test_log_phi_against_scipy_logm(self):
        P = rand_pos(np.random.default_rng(3), 5)
        ref = P - np.eye(5) + sla.logm(P)
        assert np.allclose(apply_fn(P, log_phi_fn()), ref, atol=1e-9)

    def test_round_trip_6x6(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            A = rand_herm(rng, 6)
            back = apply_fn(apply_fn(A, exp_phi_fn()), log_phi_fn())
            assert np.max(np.abs(back - A)) <= 1e-8

    def test_spectral_mapping_and_commutation(self):
        A = rand_herm(np.random.default_rng(5), 7, 2.0)
        F = apply_fn(A, exp_phi_fn())
        assert np.allclose(np.linalg.eigvalsh(F), np.sort(exp_phi(np.linalg.eigvalsh(A))), atol=1e-9)
        assert np.max(np.abs(F @ A - A @ F)) <= 1e-9 * (1 + np.max(np.abs(A))) ** 2

    def test_domain_error_for_log_phi(self):
        with pytest.raises(DomainError):
            apply_fn(np.diag([1.0, -1.0]), log_phi_fn())


class TestOrder:
    def test_examples(self):
        A = rand_herm(np.random.default_rng(6), 4)
        assert psd_order_leq(A, A)
        assert psd_order_leq(np.zeros((2, 2)), np.diag([1.0, 2.0]))
        assert not psd_order_leq(np.diag([1.0, 2.0]), np.zeros((2, 2)))

    @given(st.integers(0, 2**32 - 1))
    def test_rank_one(self, seed):
        rng = np.random.default_rng(seed)
        A = rand_herm(rng, 4)
        w = rng.normal(size=4) + 1j * rng.normal(size=4)
        assert psd_order_leq(A, A + np.outer(w, w.conj()))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            psd_order_leq(np.eye(2), np.eye(3))

    def test_min_eig(self):
        assert min_eig(np.diag([3.0, -2.0, 1.0])) == pytest.approx(-2.0)


class TestLoewner:
    def test_identity_is_borderline(self):
        for u, v in [(0.0, 1.0), (-3.0, 5.0), (2.0, 2.0)]:
            assert loewner2_det(identity_fn(), u, v).determinant == pytest.approx(0.0, abs=1e-14)

    def test_appendix_point(self):
        u, v = 0.665994, -1.193147
        lp = loewner2_det(u_minus_exp_phi_fn(), u, v)
        assert lp.determinant == pytest.approx(-0.00673, abs=1e-5)
        # independent evaluation from exp_phi directly
        eu, ev = exp_phi(u), exp_phi(v)
        fu, fv = 1 - eu / (1 + eu), 1 - ev / (1 + ev)
        dd = ((u - eu) - (v - ev)) / (u - v)
        assert lp.determinant == pytest.approx(fu * fv - dd * dd, abs=1e-13)

    def test_matrix_consistent(self):
        lp = loewner2_det(log_exp_phi_fn(), 0.3, -2.0)
        assert np.linalg.det(lp.matrix()) == pytest.approx(lp.determinant, abs=1e-14)

    @given(st.floats(-12, 12), st.floats(-12, 12))
    def test_log_phi_nonnegative(self, a, b):
        assert loewner2_det(log_phi_fn(), math.exp(a), math.exp(b)).determinant >= -1e-12

    @given(st.floats(-5, 5), st.floats(-5, 5))
    def test_symmetric(self, a, b):
        fn = u_minus_exp_phi_fn()
        assert loewner2_det(fn, a, b).determinant == pytest.approx(loewner2_det(fn, b, a).determinant, abs=1e-12)

    def test_continuous_across_diagonal(self):
        fn = log_exp_phi_fn()
        for u in (-3.0, 0.0, 0.7, 4.0):
            at = loewner2_det(fn, u, u).determinant
            near = loewner2_det(fn, u, u + 1.1e-7).determinant
            assert abs(at) <= 1e-15 and abs(near - at) <= 1e-6
