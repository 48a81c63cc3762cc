import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covpost import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    PDMatrix,
    cholesky,
    eigvals_sym,
    logdet_pd,
    schur_det_identity_check,
    solve_pd,
    spectral_norm,
)


def random_pd(rng, q, spread=1.0):
    G = rng.standard_normal((q, 2 * q)) * spread
    return PDMatrix(G @ G.T / (2 * q) + 0.1 * np.eye(q))


class TestCholesky:
    def test_identity(self):
        np.testing.assert_allclose(cholesky(np.eye(3)), np.eye(3))

    def test_two_by_two_reconstruction(self):
        m = np.array([[4.0, 2.0], [2.0, 3.0]])
        L = cholesky(m)
        # oracle: reconstruct and compare to the input
        np.testing.assert_allclose(L @ L.T, m, rtol=1e-10)
        np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]])
        assert np.allclose(np.triu(L, 1), 0.0)

    def test_indefinite_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))  # eigenvalues {3, -1}

    def test_reconstruction_random(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            q = int(rng.integers(1, 21))
            m = random_pd(rng, q)
            L = m.chol
            err = np.abs(L @ L.T - m.entries).max()
            assert err <= 1e-10 * max(1.0, np.abs(m.entries).max())

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            PDMatrix(np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(DimensionMismatchError):
            PDMatrix(np.zeros((2, 3)))


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(7)) == pytest.approx(1.0)

    def test_nilpotent(self):
        assert spectral_norm(np.array([[0.0, 1.0], [0.0, 0.0]])) == pytest.approx(1.0)

    def test_toeplitz_against_dense_eigensolver(self):
        q, rho = 50, 0.9
        idx = np.arange(q)
        m = rho ** np.abs(idx[:, None] - idx[None, :])
        # oracle: 2-norm via numpy's SVD-backed matrix norm
        oracle = np.linalg.norm(m, 2)
        got = spectral_norm(m)
        assert got == pytest.approx(oracle, rel=1e-8)
        # frozen oracle value; the q -> inf limit is (1+rho)/(1-rho) = 19
        assert got == pytest.approx(15.9315, abs=1e-3)
        assert got < (1 + rho) / (1 - rho)

    def test_matches_max_abs_eigenvalue_on_symmetric(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            q = int(rng.integers(1, 21))
            m = random_pd(rng, q).entries
            assert spectral_norm(m) == pytest.approx(np.abs(np.linalg.eigvalsh(m)).max(), rel=1e-8)

    def test_transpose_and_conjugation_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            q = int(rng.integers(2, 15))
            a = rng.standard_normal((q, q + 3))
            assert spectral_norm(a) == pytest.approx(spectral_norm(a.T), rel=1e-8)
            m = random_pd(rng, q).entries
            Q, _ = np.linalg.qr(rng.standard_normal((q, q)))
            assert spectral_norm(Q @ m @ Q.T) == pytest.approx(spectral_norm(m), rel=1e-8)

    @given(st.floats(min_value=-8.0, max_value=8.0, allow_nan=False))
    @settings(max_examples=25, deadline=None)
    def test_absolute_homogeneity(self, c):
        m = np.array([[1.0, 2.0, 0.5], [0.0, -1.0, 3.0]])
        assert spectral_norm(c * m) == pytest.approx(abs(c) * spectral_norm(m), abs=1e-10)


class TestEigvals:
    def test_diagonal(self):
        np.testing.assert_allclose(eigvals_sym(PDMatrix(np.diag([1.0, 2.0, 3.0]))), [1, 2, 3])

    def test_identity(self):
        np.testing.assert_allclose(eigvals_sym(np.eye(5)), np.ones(5))

    def test_hand_computed(self):
        # characteristic polynomial of [[2,1],[1,2]]: (2-l)^2 - 1 -> {1, 3}
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        ev = eigvals_sym(m)
        np.testing.assert_allclose(ev, [1.0, 3.0], rtol=1e-12)
        for lam in ev:
            assert abs(np.linalg.det(m - lam * np.eye(2))) <= 1e-8 * spectral_norm(m)


class TestLogdetSolve:
    def test_logdet_examples(self):
        assert logdet_pd(np.eye(4)) == pytest.approx(0.0, abs=1e-14)
        assert logdet_pd(np.diag([2.0, 2.0])) == pytest.approx(2 * np.log(2.0))

    def test_logdet_matches_eigenvalue_sum(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            q = int(rng.integers(1, 21))
            m = random_pd(rng, q)
            oracle = float(np.sum(np.log(np.linalg.eigvalsh(m.entries))))
            assert logdet_pd(m) == pytest.approx(oracle, abs=1e-8 * max(1, abs(oracle)))

    def test_solve_examples(self):
        b = np.array([[1.0], [2.0]])
        np.testing.assert_allclose(solve_pd(np.eye(2), b), b)
        np.testing.assert_allclose(
            solve_pd(np.diag([2.0, 4.0]), np.ones((2, 1))), [[0.5], [0.25]]
        )

    def test_solve_residual(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            q = int(rng.integers(1, 21))
            m = random_pd(rng, q)
            rhs = rng.standard_normal((q, 3))
            x = solve_pd(m, rhs)
            assert np.linalg.norm(m.entries @ x - rhs) <= 1e-9 * max(1.0, np.linalg.norm(rhs))

    def test_solve_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            solve_pd(np.eye(2), np.ones((3, 1)))


class TestSchurIdentity:
    def test_identity_two(self):
        S = np.eye(2)
        # both sides equal det(I + I) = 4
        assert np.linalg.det(S + np.eye(2)) == pytest.approx(4.0)
        assert schur_det_identity_check(S, 1.0, np.array([1.0]))

    def test_identity_three(self):
        S = np.eye(3)
        assert np.linalg.det(S + np.diag([1.0, 2.0, 3.0])) == pytest.approx(24.0)
        assert schur_det_identity_check(S, 1.0, np.array([2.0, 3.0]))

    def test_random_six(self):
        rng = np.random.default_rng(5)
        S = random_pd(rng, 6)
        delta = rng.uniform(0.2, 2.0, size=6)
        assert schur_det_identity_check(S, float(delta[0]), delta[1:])

    def test_random_many(self):
        rng = np.random.default_rng(6)
        for _ in range(500):
            d = int(rng.integers(2, 11))
            S = random_pd(rng, d, spread=rng.uniform(0.5, 3.0))
            delta = rng.uniform(0.05, 5.0, size=d)
            assert schur_det_identity_check(S, float(delta[0]), delta[1:])

    def test_dimension_errors(self):
        with pytest.raises(DimensionMismatchError):
            schur_det_identity_check(np.eye(3), 1.0, np.array([1.0]))
        with pytest.raises(DimensionMismatchError):
            schur_det_identity_check(np.array([[2.0]]), 1.0, np.array([]))


class TestPDMatrix:
    def test_immutable(self):
        m = PDMatrix(np.eye(2))
        with pytest.raises(AttributeError):
            m.entries = np.eye(2)
        with pytest.raises(ValueError):
            m.entries[0, 0] = 5.0

    def test_cached_factor_accuracy(self):
        rng = np.random.default_rng(7)
        m = random_pd(rng, 12)
        L = m.chol
        assert L is m.chol  # cached
        assert np.abs(L @ L.T - m.entries).max() <= 1e-10 * np.abs(m.entries).max()
