import math

import numpy as np
import pytest
import scipy.stats as sps
from hypothesis import given, settings
from hypothesis import strategies as st

from covpost import (
    DegreesOfFreedomTooSmallError,
    DimensionMismatchError,
    NonFiniteDensityError,
    ParameterOutOfRangeError,
    PDMatrix,
    RngStream,
    derive_stream_id,
    inverse_wishart,
    matrix_normal,
    slice_sample,
    std_normal_matrix,
    wishart,
)
from covpost import sampling


class TestRngStream:
    @given(st.integers(min_value=0, max_value=2**63), st.integers(min_value=0, max_value=2**63))
    @settings(max_examples=25, deadline=None)
    def test_same_key_replays_same_sequence(self, seed, stream):
        a = RngStream(seed, stream).gen.standard_normal(8)
        b = RngStream(seed, stream).gen.standard_normal(8)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(1, 0).gen.standard_normal(8)
        b = RngStream(1, 1).gen.standard_normal(8)
        assert not np.array_equal(a, b)

    def test_derive_stream_id_stable(self):
        assert derive_stream_id(1, 2, 3) == derive_stream_id(1, 2, 3)
        assert derive_stream_id(1, 2, 3) != derive_stream_id(1, 3, 2)

    def test_substream_deterministic(self):
        a = RngStream(9, 4).substream(1, 2).gen.standard_normal(4)
        b = RngStream(9, 4).substream(1, 2).gen.standard_normal(4)
        np.testing.assert_array_equal(a, b)


class TestStdNormalMatrix:
    def test_moments(self):
        rng = RngStream(10)
        x = std_normal_matrix(100_000, 1, rng).ravel()
        se_mean = 1.0 / math.sqrt(x.size)
        assert abs(x.mean()) <= 4 * se_mean
        se_var = math.sqrt(2.0 / x.size)
        assert abs(x.var() - 1.0) <= 4 * se_var

    def test_determinism(self):
        a = std_normal_matrix(3, 4, RngStream(5, 6))
        b = std_normal_matrix(3, 4, RngStream(5, 6))
        np.testing.assert_array_equal(a, b)

    def test_zero_rows_rejected(self):
        with pytest.raises(DimensionMismatchError):
            std_normal_matrix(0, 2, RngStream(0))


class TestMatrixNormal:
    def test_identity_covariances_match_std_normal(self):
        # same distribution as std_normal_matrix: per-entry two-sample KS
        rng = RngStream(11)
        a = np.array([matrix_normal(np.zeros((1, 1)), np.eye(1), np.eye(1), rng)[0, 0]
                      for _ in range(10_000)])
        b = std_normal_matrix(10_000, 1, rng).ravel()
        assert sps.ks_2samp(a, b).pvalue > 0.01

    def test_mean_recovery(self):
        rng = RngStream(12)
        M = np.array([[1.0, -2.0], [0.5, 3.0], [0.0, 1.0]])
        U = PDMatrix(np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 1.5]]))
        V = PDMatrix(np.array([[1.0, 0.4], [0.4, 2.0]]))
        draws = np.stack([matrix_normal(M, U, V, rng) for _ in range(20_000)])
        se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - M) <= 4 * se)

    def test_kronecker_covariance(self):
        # vec (column-stacked) covariance must be V (x) U
        rng = RngStream(13)
        U = PDMatrix(np.array([[1.0, 0.6], [0.6, 2.0]]))
        V = PDMatrix(np.array([[1.5, -0.5], [-0.5, 1.0]]))
        n = 100_000
        vecs = np.empty((n, 4))
        for i in range(n):
            vecs[i] = matrix_normal(np.zeros((2, 2)), U, V, rng).ravel(order="F")
        emp = np.cov(vecs.T)
        target = np.kron(V.entries, U.entries)
        # SE of a covariance entry is ~ sqrt((K_ii K_jj + K_ij^2)/n)
        d = np.diag(target)
        se = np.sqrt((np.outer(d, d) + target**2) / n)
        assert np.all(np.abs(emp - target) <= 5 * se)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            matrix_normal(np.zeros((2, 3)), np.eye(2), np.eye(2), RngStream(0))


class TestWishart:
    def test_mean(self):
        rng = RngStream(14)
        draws = np.stack([wishart(5.0, np.eye(2), rng).entries for _ in range(100_000)])
        se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - 5.0 * np.eye(2)) <= 4 * se)

    def test_scalar_reduces_to_chi_square(self):
        # q=1: W(df, s) is s * chi2_df, so variance is 2 * df * s^2
        rng = RngStream(15)
        s = 1.7
        x = np.array([wishart(3.0, np.array([[s]]), rng).entries[0, 0] for _ in range(100_000)])
        assert x.mean() == pytest.approx(3.0 * s, rel=0.02)
        var_se = np.std((x - x.mean()) ** 2, ddof=1) / math.sqrt(x.size)
        assert abs(x.var(ddof=1) - 2 * 3.0 * s * s) <= 4 * var_se

    def test_scalar_matches_chi_square_in_distribution(self):
        rng = RngStream(16)
        x = np.array([wishart(4.5, np.array([[1.0]]), rng).entries[0, 0] for _ in range(5000)])
        assert sps.kstest(x, sps.chi2(df=4.5).cdf).pvalue > 0.01

    def test_df_too_small(self):
        with pytest.raises(DegreesOfFreedomTooSmallError):
            wishart(0.5, np.eye(2), RngStream(0))

    def test_draw_is_pd(self):
        rng = RngStream(17)
        for _ in range(20):
            w = wishart(6.2, np.diag([1.0, 2.0, 3.0]), rng)
            assert np.linalg.eigvalsh(w.entries)[0] > 0


class TestInverseWishart:
    def test_mean(self):
        rng = RngStream(18)
        q = 2
        draws = np.stack([inverse_wishart(q + 3.0, np.eye(q), rng).entries for _ in range(100_000)])
        se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - np.eye(q) / 2.0) <= 4 * se)

    def test_conditional_mean_convention(self):
        # with df = nu+q+n-1 and scale S+cD, the analytic mean divisor is n+nu-2
        nu, q, n = 2.0, 3, 40
        df = nu + q + n - 1
        assert df - q - 1 == n + nu - 2
        rng = RngStream(19)
        scale = PDMatrix(np.diag([4.0, 2.0, 1.0]) * n)
        draws = np.stack([inverse_wishart(df, scale, rng).entries for _ in range(20_000)])
        se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
        target = scale.entries / (n + nu - 2)
        assert np.all(np.abs(draws.mean(axis=0) - target) <= 4 * se)

    def test_scalar_inverse_gamma(self):
        # q=1, df=4, scale=2: inverse gamma with mean 2/(4-2) = 1
        rng = RngStream(20)
        x = np.array([inverse_wishart(4.0, np.array([[2.0]]), rng).entries[0, 0]
                      for _ in range(100_000)])
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() - 1.0) <= 4 * se

    def test_df_too_small(self):
        with pytest.raises(DegreesOfFreedomTooSmallError):
            inverse_wishart(1.0, np.eye(2), RngStream(0))


class TestScalarSamplers:
    def test_gamma_mean(self):
        rng = RngStream(21)
        theta = 2.5
        x = sampling.gamma(1.0, theta, rng, size=100_000)
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() - theta) <= 4 * se

    def test_inverse_gamma_matches_scipy(self):
        rng = RngStream(22)
        x = sampling.inverse_gamma(3.0, 2.0, rng, size=5000)
        assert sps.kstest(x, sps.invgamma(a=3.0, scale=2.0).cdf).pvalue > 0.01

    def test_uniform_support(self):
        rng = RngStream(23)
        a, eps = 4.0, 1e-3
        x = sampling.uniform(a, a + eps, rng, size=1000)
        assert np.all((x >= a) & (x <= a + eps))

    def test_beta_chi_square(self):
        rng = RngStream(24)
        b = sampling.beta(2.0, 5.0, rng, size=50_000)
        assert b.mean() == pytest.approx(2.0 / 7.0, abs=0.01)
        c = sampling.chi_square(3.7, rng, size=50_000)
        assert c.mean() == pytest.approx(3.7, rel=0.02)

    def test_parameter_validation(self):
        rng = RngStream(0)
        with pytest.raises(ParameterOutOfRangeError):
            sampling.gamma(-1.0, 1.0, rng)
        with pytest.raises(ParameterOutOfRangeError):
            sampling.uniform(2.0, 1.0, rng)
        with pytest.raises(ParameterOutOfRangeError):
            sampling.truncated_normal_positive(0.0, -1.0, rng)


class TestTruncatedNormal:
    def test_all_positive(self):
        rng = RngStream(25)
        x = sampling.truncated_normal_positive(-2.0, 1.5, rng, size=5000)
        assert np.all(x > 0)

    def test_central_case_matches_scipy(self):
        rng = RngStream(26)
        mu, sigma = 1.0, 2.0
        x = sampling.truncated_normal_positive(mu, sigma, rng, size=5000)
        dist = sps.truncnorm(a=(0 - mu) / sigma, b=np.inf, loc=mu, scale=sigma)
        assert sps.kstest(x, dist.cdf).pvalue > 0.01

    def test_deep_tail_moments(self):
        # mu/sigma = -6 exercises the rejection branch
        rng = RngStream(27)
        mu, sigma = -6.0, 1.0
        x = sampling.truncated_normal_positive(mu, sigma, rng, size=20_000)
        dist = sps.truncnorm(a=6.0, b=np.inf, loc=mu, scale=sigma)
        assert np.all(x > 0)
        assert x.mean() == pytest.approx(dist.mean(), abs=4 * x.std(ddof=1) / math.sqrt(x.size))


class TestSliceSample:
    def test_gamma_target_mean(self):
        # chained transitions targeting Gamma(3, 1)
        rng = RngStream(28)
        target = sps.gamma(a=3.0)

        def logf(x):
            return 2.0 * math.log(x) - x

        x, kept = 2.0, []
        for i in range(50_000):
            x = slice_sample(logf, x, rng)
            if i % 5 == 4:
                kept.append(x)
        kept = np.array(kept)
        se = kept.std(ddof=1) / math.sqrt(kept.size)
        assert abs(kept.mean() - 3.0) <= 4 * se

    def test_lognormal_target_ks(self):
        rng = RngStream(29)

        def logf(x):
            lx = math.log(x)
            return -lx - 0.5 * lx * lx

        x, kept = 1.0, []
        for i in range(50_000):
            x = slice_sample(logf, x, rng)
            if i % 5 == 4:
                kept.append(x)
        direct = rng.gen.lognormal(0.0, 1.0, size=10_000)
        assert sps.ks_2samp(np.array(kept), direct).pvalue > 0.01

    def test_uniform_support_confinement(self):
        rng = RngStream(30)

        def logf(x):
            return 0.0 if 1.0 <= x <= 2.0 else -math.inf

        x = 1.5
        for _ in range(500):
            x = slice_sample(logf, x, rng)
            assert 1.0 <= x <= 2.0

    def test_non_finite_at_current(self):
        with pytest.raises(NonFiniteDensityError):
            slice_sample(lambda x: -math.inf, 1.0, RngStream(0))

    def test_invariant_under_chaining_matches_direct(self):
        # distributional check against direct gamma draws
        rng = RngStream(31)
        a, theta = 2.5, 1.3

        def logf(x):
            return (a - 1.0) * math.log(x) - x / theta

        x, kept = 1.0, []
        for i in range(30_000):
            x = slice_sample(logf, x, rng)
            if i % 3 == 2:
                kept.append(x)
        assert sps.kstest(np.array(kept), sps.gamma(a=a, scale=theta).cdf).pvalue > 0.01
