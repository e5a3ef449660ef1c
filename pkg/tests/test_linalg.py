import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from saddlescape.errors import ConvergenceFailure, DegenerateInput
from saddlescape.linalg import (DirectionFrame, default_zero_tol,
                                fd_jacobian_sym, gram_schmidt, morse_index,
                                sym_eigen, symmetrize)


class TestGramSchmidt:
    def test_already_orthonormal_is_unchanged(self):
        frame = gram_schmidt([[1.0, 0.0], [0.0, 1.0]])
        assert_allclose(frame.vectors, np.eye(2), atol=1e-14)

    def test_single_projection_step(self):
        frame = gram_schmidt([[2.0, 0.0], [1.0, 1.0]])
        assert_allclose(frame.vectors, [[1.0, 0.0], [0.0, 1.0]], atol=1e-14)

    def test_random_input_is_orthonormal(self):
        rng = np.random.default_rng(1234)
        a = rng.standard_normal((3, 6))
        q = gram_schmidt(a).vectors
        assert np.max(np.abs(q @ q.T - np.eye(3))) <= 1e-12

    def test_orientation_follows_input(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((3, 5))
        q = gram_schmidt(a).vectors
        for i in range(3):
            r = a[i] - sum((q[j] @ a[i]) * q[j] for j in range(i))
            assert q[i] @ r > 0

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((4, 7))
        first = gram_schmidt(a).vectors
        second = gram_schmidt(first).vectors
        assert np.max(np.abs(second - first)) <= 1e-12

    def test_dependent_vectors_rejected(self):
        with pytest.raises(DegenerateInput):
            gram_schmidt([[1.0, 0.0], [1.0, 1e-14]])

    def test_more_vectors_than_dim_rejected(self):
        with pytest.raises(ValueError):
            gram_schmidt(np.eye(3)[:, :2].T @ np.eye(2))  # 3 vectors in R^2
            gram_schmidt(np.ones((3, 2)))


class TestSymEigen:
    def test_diagonal(self):
        eig = sym_eigen(np.diag([3.0, -1.0]))
        assert_allclose(eig.eigenvalues, [-1.0, 3.0])

    def test_two_by_two_exchange(self):
        eig = sym_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert_allclose(eig.eigenvalues, [-1.0, 1.0], atol=1e-14)
        s = 1.0 / np.sqrt(2.0)
        low = eig.eigenvectors[:, 0]
        high = eig.eigenvectors[:, 1]
        assert_allclose(np.abs(low), [s, s], atol=1e-12)
        assert_allclose(np.abs(high), [s, s], atol=1e-12)
        assert low @ np.array([1.0, -1.0]) != 0  # spans (1,-1)
        assert abs(low @ high) < 1e-12

    def test_reconstruction_residual(self):
        rng = np.random.default_rng(99)
        a = symmetrize(rng.standard_normal((5, 5)))
        eig = sym_eigen(a)
        resid = a @ eig.eigenvectors - eig.eigenvectors * eig.eigenvalues
        assert np.max(np.abs(resid)) <= 1e-10

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_eigenvalue_sum_equals_trace(self, seed):
        rng = np.random.default_rng(seed)
        a = symmetrize(rng.standard_normal((6, 6)))
        eig = sym_eigen(a)
        assert abs(eig.eigenvalues.sum() - np.trace(a)) <= 1e-9 * np.linalg.norm(a, "fro")

    def test_eigenvectors_orthonormal(self):
        rng = np.random.default_rng(3)
        a = symmetrize(rng.standard_normal((8, 8)))
        v = sym_eigen(a).eigenvectors
        assert np.max(np.abs(v.T @ v - np.eye(8))) <= 1e-12

    def test_dense_limit_enforced(self):
        with pytest.raises(ValueError):
            sym_eigen(np.eye(4), dense_limit=3)

    def test_sweep_limit_raises(self):
        rng = np.random.default_rng(11)
        a = symmetrize(rng.standard_normal((6, 6)))
        with pytest.raises(ConvergenceFailure):
            sym_eigen(a, max_sweeps=0)


class TestFdJacobian:
    def test_exact_for_linear_force(self):
        a = symmetrize(np.arange(16.0).reshape(4, 4))
        jac = fd_jacobian_sym(lambda x: a @ x, np.ones(4), step=1e-3)
        assert_allclose(jac, a, atol=1e-10)

    def test_query_cost_is_2n(self):
        from saddlescape.forces import ForceOracle

        oracle = ForceOracle(lambda x: -x, dim=5)
        fd_jacobian_sym(oracle, np.zeros(5), step=1e-4)
        assert oracle.query_counter == 10

    def test_second_order_accuracy(self):
        # 1-D F(x) = -4x^3 has F'(1) = -12; halving the step quarters the error
        fn = lambda x: np.array([-4.0 * x[0] ** 3])
        x = np.array([1.0])
        err = lambda h: abs(fd_jacobian_sym(fn, x, h)[0, 0] + 12.0)
        ratio = err(1e-2) / err(5e-3)
        assert 3.5 <= ratio <= 4.5

    def test_quadratic_energy_hessian_independent_of_step(self):
        a = symmetrize(np.array([[2.0, 1.0, 0.0], [1.0, -1.0, 0.5], [0.0, 0.5, 3.0]]))
        force = lambda x: -(a @ x)  # F = -grad E for E = x^T A x / 2
        j1 = fd_jacobian_sym(force, np.array([0.3, -0.2, 0.9]), 1e-2)
        j2 = fd_jacobian_sym(force, np.array([0.3, -0.2, 0.9]), 1e-4)
        assert_allclose(j1, -a, atol=1e-8)
        assert_allclose(j2, -a, atol=1e-8)


class TestMorseIndex:
    def test_sign_count(self):
        eig = sym_eigen(np.diag([2.0, -1.0]))
        assert morse_index(eig, 1e-6) == (1, 0)

    def test_all_negative_is_minimum(self):
        eig = sym_eigen(np.diag([-2.0, -1.0, -0.5]))
        assert morse_index(eig, 1e-6) == (0, 0)

    def test_degenerate_counted(self):
        eig = sym_eigen(np.diag([1.0, 1e-9, -3.0]))
        assert morse_index(eig, 1e-6) == (1, 1)

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_index_partition(self, seed):
        rng = np.random.default_rng(seed)
        a = symmetrize(rng.standard_normal((5, 5)))
        tol = 1e-6
        plus, deg = morse_index(sym_eigen(a), tol)
        minus, deg2 = morse_index(sym_eigen(-a), tol)
        assert deg == deg2
        assert plus + minus + deg == 5

    def test_default_zero_tol_scales_with_spectrum(self):
        eig = sym_eigen(np.diag([2000.0, -1.0]))
        assert default_zero_tol(eig) == pytest.approx(2e-3)


class TestDirectionFrame:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            DirectionFrame(np.array([[1.0, 0.0], [1.0, 0.0]]))

    def test_empty_frame_allowed(self):
        frame = DirectionFrame.empty(4)
        assert frame.count == 0 and frame.dim == 4

    def test_take_prefix(self):
        frame = gram_schmidt(np.eye(3))
        assert frame.take(2).count == 2
