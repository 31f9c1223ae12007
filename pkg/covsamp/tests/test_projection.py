"""
Unit tests of the projection algebra
"""
import numpy as np
import pytest

from covsamp.errors import InvalidParameter, NotPositiveDefinite, SingularSubmatrix
from covsamp.projection import CovarianceModel, cholesky, partial_r_squared, project, residual_covariance, \
    residual_variance
from covsamp.tests.populations import random_pd


def test_from_matrix_labels_and_k():
    cov = CovarianceModel.from_matrix(np.eye(5))
    assert cov.k == 3
    assert cov.labels == ('Y', 'X', 'W1', 'W2', 'W3')
    assert cov.covariate_labels == ('W1', 'W2', 'W3')
    with pytest.raises(ValueError):
        cov.sigma[0, 0] = 2.


def test_from_matrix_rejects_bad_input():
    with pytest.raises(InvalidParameter):
        CovarianceModel.from_matrix(np.eye(2))
    with pytest.raises(InvalidParameter):
        CovarianceModel.from_matrix(np.eye(3), labels=['a', 'b'])
    with pytest.raises(InvalidParameter):
        CovarianceModel.from_matrix(np.eye(3), labels=['a', 'a', 'b'])
    asym = np.eye(3)
    asym[0, 1] = 0.5
    with pytest.raises(InvalidParameter):
        CovarianceModel.from_matrix(asym)


def test_collinear_matrix_is_not_positive_definite():
    v = np.array([1., 2., 3.])
    sigma = np.outer(v, v) + np.diag([0., 1., 1.])
    sigma[2, 2] = sigma[1, 1] * 4
    sigma[1, 2] = sigma[2, 1] = 2 * sigma[1, 1]
    sigma[0, 2] = sigma[2, 0] = 2 * sigma[0, 1]
    with pytest.raises(NotPositiveDefinite) as info:
        CovarianceModel.from_matrix(sigma, labels=['y', 'x', 'w'])
    assert 'y, x, w' in str(info.value)
    assert info.value.exit_code == 3


def test_project_matches_least_squares():
    rng = np.random.default_rng(1)
    cov = CovarianceModel.from_matrix(random_pd(rng, 6))
    res = project(cov, 0, [1, 2, 3])
    s = cov.sigma
    expected = np.linalg.solve(s[1:4, 1:4], s[1:4, 0])
    assert np.allclose(res.coefficients, expected, rtol=1e-10)
    assert res.residual_variance == pytest.approx(s[0, 0] - s[0, 1:4] @ expected, rel=1e-10)
    assert res.r_squared == pytest.approx(1 - res.residual_variance / s[0, 0], rel=1e-10)


def test_project_rejects_bad_predictors():
    cov = CovarianceModel.from_matrix(np.eye(4))
    with pytest.raises(InvalidParameter):
        project(cov, 0, [])
    with pytest.raises(InvalidParameter):
        project(cov, 0, [0, 1])
    with pytest.raises(InvalidParameter):
        project(cov, 0, [1, 7])


def test_cholesky_flags_singular_block():
    with pytest.raises(SingularSubmatrix):
        cholesky(np.ones((2, 2)))


def test_residual_covariance_is_schur_complement():
    rng = np.random.default_rng(2)
    cov = CovarianceModel.from_matrix(random_pd(rng, 5))
    s = cov.sigma
    a, b = [0, 1], [2, 3, 4]
    expected = s[np.ix_(a, a)] - s[np.ix_(a, b)] @ np.linalg.solve(s[np.ix_(b, b)], s[np.ix_(b, a)])
    assert np.allclose(residual_covariance(cov, a, b), expected, rtol=1e-10)
    with pytest.raises(InvalidParameter):
        residual_covariance(cov, [0, 1], [1, 2])
    with pytest.raises(InvalidParameter):
        residual_covariance(cov, [0], [])


def test_partial_r_squared():
    rng = np.random.default_rng(3)
    cov = CovarianceModel.from_matrix(random_pd(rng, 5))
    s = cov.sigma

    # without controls it is the plain R-squared
    assert partial_r_squared(cov, 0, [1, 2]) == pytest.approx(project(cov, 0, [1, 2]).r_squared, rel=1e-10)

    base = residual_variance(s, 0, [3])
    full = residual_variance(s, 0, [3, 1, 2])
    assert partial_r_squared(cov, 0, [1, 2], [3]) == pytest.approx((base - full) / base, rel=1e-10)
    assert 0 <= partial_r_squared(cov, 4, [0], [1, 2, 3]) <= 1

    with pytest.raises(InvalidParameter):
        partial_r_squared(cov, 0, [1], [1])
    with pytest.raises(InvalidParameter):
        partial_r_squared(cov, 0, [])


def test_independent_added_set_has_zero_partial_r_squared():
    cov = CovarianceModel.from_matrix(np.diag([2., 1., 3., 4.]))
    assert partial_r_squared(cov, 0, [2], [1]) == 0.


@pytest.mark.parametrize('rho', [.1, .5, .9])
@pytest.mark.parametrize('k', [4, 10, 50])
def test_exchangeable_schur_complement_closed_form(rho, k):
    sigma = np.full((k + 2, k + 2), rho)
    np.fill_diagonal(sigma, 1.)
    cov = CovarianceModel.from_matrix(sigma)
    rng = np.random.default_rng(k)
    for _ in range(20):
        d1 = int(rng.integers(1, k))
        observed = 2 + np.sort(rng.choice(k, size=d1, replace=False))
        unobserved = [i for i in range(2, k + 2) if i not in observed]
        d2 = len(unobserved)
        off = rho * (1 - rho) / ((d1 - 1) * rho + 1)
        expected = off * np.ones((d2, d2)) + (1 - rho) * np.eye(d2)
        assert np.allclose(residual_covariance(cov, unobserved, observed), expected, rtol=0, atol=1e-10)


def test_projection_does_not_depend_on_predictor_order():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = int(rng.integers(3, 10))
        model = CovarianceModel.from_matrix(random_pd(rng, n))
        target = int(rng.integers(n))
        predictors = [i for i in range(n) if i != target]
        predictors = list(rng.choice(predictors, size=int(rng.integers(1, n)), replace=False))
        perm = rng.permutation(len(predictors))
        direct = project(model, target, predictors)
        shuffled = project(model, target, [predictors[i] for i in perm])
        assert shuffled.coefficients == pytest.approx(direct.coefficients[perm], rel=1e-9, abs=1e-12)
        assert shuffled.residual_variance == pytest.approx(direct.residual_variance, rel=1e-9)


def test_iterated_projection_equals_joint_projection():
    rng = np.random.default_rng(9)
    for _ in range(50):
        n = int(rng.integers(4, 10))
        model = CovarianceModel.from_matrix(random_pd(rng, n))
        cut = int(rng.integers(2, n))
        a_set, b_set = list(range(1, cut)), list(range(cut, n))
        joint = project(model, 0, a_set + b_set)
        # covariance of (target, B) once A is partialled out
        partial = residual_covariance(model, [0] + b_set, a_set)
        b_idx = list(range(1, len(b_set) + 1))
        assert residual_variance(partial, 0, b_idx) == pytest.approx(joint.residual_variance, rel=1e-9)
        coefficients = np.linalg.solve(partial[1:, 1:], partial[1:, 0])
        assert coefficients == pytest.approx(joint.coefficients[len(a_set):], rel=1e-8, abs=1e-12)
