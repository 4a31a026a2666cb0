import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepgraph.errors import ContractViolation, NotPositiveDefinite
from stepgraph.linalg import (cholesky, invert_pd, least_squares_residuals,
                              log_det_pd, pearson_correlation)


class TestLeastSquaresResiduals:
    def test_residual_orthogonal_to_predictors(self):
        rng = np.random.default_rng(0)
        z = rng.standard_normal((30, 3))
        y = rng.standard_normal(30)
        r = least_squares_residuals(y, z)
        assert np.abs(z.T @ r).max() < 1e-10

    def test_no_predictors_centers(self):
        y = np.array([1.0, 2.0, 6.0])
        r = least_squares_residuals(y, None)
        assert np.allclose(r, y - 3.0)
        assert np.allclose(least_squares_residuals(y, np.empty((3, 0))), r)

    def test_exact_fit_gives_zero_residual(self):
        rng = np.random.default_rng(1)
        z = rng.standard_normal((20, 2))
        y = z @ np.array([2.0, -1.0])
        assert np.abs(least_squares_residuals(y, z)).max() < 1e-10

    def test_rank_deficient_uses_min_norm(self):
        rng = np.random.default_rng(2)
        base = rng.standard_normal(25)
        z = np.column_stack([base, base])  # duplicated column
        y = rng.standard_normal(25)
        r = least_squares_residuals(y, z)
        assert np.abs(z.T @ r).max() < 1e-8

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            least_squares_residuals(np.ones(5), np.ones((4, 1)))
        with pytest.raises(ContractViolation):
            least_squares_residuals(np.ones((5, 2)))


class TestPearson:
    def test_matches_numpy(self):
        rng = np.random.default_rng(3)
        u, v = rng.standard_normal(50), rng.standard_normal(50)
        assert pearson_correlation(u, v) == pytest.approx(
            np.corrcoef(u, v)[0, 1], abs=1e-12)

    def test_zero_variance_convention(self):
        assert pearson_correlation(np.ones(10), np.arange(10.0)) == 0.0

    def test_needs_two_points(self):
        with pytest.raises(ContractViolation):
            pearson_correlation(np.array([1.0]), np.array([2.0]))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_bounded(self, seed):
        rng = np.random.default_rng(seed)
        u, v = rng.standard_normal(12), rng.standard_normal(12)
        assert abs(pearson_correlation(u, v)) <= 1.0


class TestCholesky:
    def test_factorizes(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((6, 6))
        spd = a @ a.T + 6 * np.eye(6)
        left = cholesky(spd)
        assert np.allclose(left @ left.T, spd)
        assert np.allclose(left, np.tril(left))

    def test_not_pd_reports_pivot(self):
        bad = np.diag([1.0, -2.0, 3.0])
        with pytest.raises(NotPositiveDefinite) as exc:
            cholesky(bad)
        assert exc.value.pivot == 1

    def test_asymmetric_rejected(self):
        m = np.array([[1.0, 0.5], [0.2, 1.0]])
        with pytest.raises(ContractViolation):
            cholesky(m)


class TestPdHelpers:
    def test_invert_pd_matches_numpy(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((5, 5))
        spd = a @ a.T + 5 * np.eye(5)
        assert np.allclose(invert_pd(spd), np.linalg.inv(spd), atol=1e-10)

    def test_log_det_matches_slogdet(self):
        rng = np.random.default_rng(6)
        a = rng.standard_normal((7, 7))
        spd = a @ a.T + 7 * np.eye(7)
        sign, logdet = np.linalg.slogdet(spd)
        assert sign == 1.0
        assert log_det_pd(spd) == pytest.approx(logdet, abs=1e-10)

    @given(st.integers(0, 2**32 - 1), st.integers(2, 6))
    @settings(max_examples=25, deadline=None)
    def test_inverse_roundtrip(self, seed, p):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((p, p))
        spd = a @ a.T + p * np.eye(p)
        assert np.allclose(invert_pd(spd) @ spd, np.eye(p), atol=1e-8)
