"""
Population linear projection algebra on covariance matrices.

Date: October 2026

Every sensitivity parameter reduces to Schur complements and quadratic forms of the covariance matrix of
(Y, X, W_1, ..., W_K). Index 0 is always Y, index 1 is X and covariate i sits at index 2 + i.

Linear solves go through a Cholesky factorization. A failed factorization is the singularity signal, there is no
pseudo-inverse fallback.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg

from covsamp.errors import DegenerateTarget, InternalConsistency, InvalidParameter, NotPositiveDefinite, \
    SingularSubmatrix


IDX_Y = 0
IDX_X = 1

PD_TOLERANCE = 1e-10
ORTHOGONALITY_TOLERANCE = 1e-10
DEGENERATE_TOLERANCE = 1e-14
SYMMETRY_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """
    Labeled positive definite covariance matrix of (Y, X, W_1, ..., W_K).

    Use `CovarianceModel.from_matrix` to build one, it checks symmetry and positive definiteness.
    """
    labels: Tuple[str, ...]
    sigma: np.ndarray

    @property
    def k(self):
        return self.sigma.shape[0] - 2

    @property
    def covariate_labels(self):
        return self.labels[2:]

    @classmethod
    def from_matrix(cls, sigma, labels=None, pd_tolerance=PD_TOLERANCE, symmetry_tolerance=SYMMETRY_TOLERANCE):
        sigma = np.array(sigma, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] < 3:
            raise InvalidParameter('The covariance matrix must be square with dimension K + 2 >= 3, got shape {}.'.format(
                sigma.shape))
        if labels is None:
            labels = ['Y', 'X'] + ['W{}'.format(i + 1) for i in range(sigma.shape[0] - 2)]
        labels = tuple(str(l) for l in labels)
        if len(labels) != sigma.shape[0]:
            raise InvalidParameter('Got {} labels for a covariance matrix of dimension {}.'.format(
                len(labels), sigma.shape[0]))
        if len(set(labels)) != len(labels):
            raise InvalidParameter('Variable labels must be unique.')

        scale = np.max(np.abs(sigma))
        if np.max(np.abs(sigma - sigma.T)) > symmetry_tolerance * max(scale, 1.0):
            raise InvalidParameter('The covariance matrix is not symmetric.')
        sigma = (sigma + sigma.T) / 2
        check_positive_definite(sigma, pd_tolerance=pd_tolerance, labels=labels)

        sigma.setflags(write=False)
        return cls(labels=labels, sigma=sigma)


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    coefficients: np.ndarray
    residual_variance: float
    r_squared: float


def check_positive_definite(sigma, pd_tolerance=PD_TOLERANCE, labels=None):
    """
    Raise NotPositiveDefinite when the smallest eigenvalue is below pd_tolerance times the largest diagonal entry.
    """
    threshold = pd_tolerance * np.max(np.diag(sigma))
    try:
        # succeeds iff the smallest eigenvalue exceeds the threshold
        linalg.cholesky(sigma - threshold * np.eye(len(sigma)), lower=True, check_finite=False)
    except linalg.LinAlgError:
        min_eig = float(linalg.eigvalsh(sigma, subset_by_index=[0, 0])[0])
        raise NotPositiveDefinite(min_eig, float(threshold), labels=labels)


def cholesky(block):
    """
    Cholesky factor of a symmetric positive definite block, as returned by scipy.linalg.cho_factor.

    Raises
    ------
    SingularSubmatrix if the block is not numerically positive definite.
    """
    try:
        return linalg.cho_factor(block, lower=True, check_finite=False)
    except linalg.LinAlgError as e:
        raise SingularSubmatrix('Covariance block of dimension {} is singular: {}'.format(len(block), e))


def solve(factor, rhs):
    return linalg.cho_solve(factor, rhs, check_finite=False)


def clamp_variance(value, scale, tol=ORTHOGONALITY_TOLERANCE):
    """
    Clamp a residual variance that is negative within tolerance to zero.
    """
    if value >= 0:
        return value
    if value >= -tol * max(scale, 1.0):
        return 0.
    raise InternalConsistency('Residual variance {:.3e} is negative beyond tolerance.'.format(value))


def schur_complement(sigma, a, b):
    """
    Var(A) - Cov(A, B) Var(B)^-1 Cov(B, A) for index arrays a and b of a covariance matrix.
    """
    a, b = np.asarray(a, dtype=int), np.asarray(b, dtype=int)
    s_aa = sigma[np.ix_(a, a)]
    if len(b) == 0:
        return s_aa.copy()
    s_ab = sigma[np.ix_(a, b)]
    factor = cholesky(sigma[np.ix_(b, b)])
    out = s_aa - s_ab @ solve(factor, s_ab.T)
    return (out + out.T) / 2


def residual_variance(sigma, target, predictors, tol=ORTHOGONALITY_TOLERANCE):
    """
    Var(target^{perp predictors}), clamped at zero.
    """
    predictors = np.asarray(predictors, dtype=int)
    var_t = sigma[target, target]
    if len(predictors) == 0:
        return float(var_t)
    c = sigma[predictors, target]
    b = solve(cholesky(sigma[np.ix_(predictors, predictors)]), c)
    return clamp_variance(float(var_t - c @ b), var_t, tol)


def partial_r_squared_matrix(sigma, target, added, controls, degenerate_tolerance=DEGENERATE_TOLERANCE,
                             tol=ORTHOGONALITY_TOLERANCE):
    """
    Partial R-squared of target on added, controlling for controls, computed from a covariance matrix.

    It equals 1 - Var(target^{perp controls, added}) / Var(target^{perp controls}).
    """
    controls = list(controls)
    added = list(added)
    base = residual_variance(sigma, target, controls, tol)
    if base <= degenerate_tolerance:
        raise DegenerateTarget('The target has residual variance {:.3e} after projecting out the controls.'.format(base))
    full = residual_variance(sigma, target, controls + added, tol)
    return float(min(max((base - full) / base, 0.), 1.))


def _check_indices(model, indices, name):
    dim = model.sigma.shape[0]
    for i in indices:
        if not 0 <= i < dim:
            raise InvalidParameter('{} index {} is outside [0, {}).'.format(name, i, dim))
    if len(set(indices)) != len(indices):
        raise InvalidParameter('{} indices must be distinct.'.format(name))


def project(model: CovarianceModel, target: int, predictors: Sequence[int],
            tol: float = ORTHOGONALITY_TOLERANCE) -> ProjectionResult:
    """
    Population linear projection of one variable on a set of variables.

    Parameters
    ----------
    model : CovarianceModel
    target : int
        Index of the projected variable.
    predictors : sequence of int
        Indices of the predictors. Must be non-empty and must not contain the target.
    tol : float
        Tolerance of the residual orthogonality check and of the negative variance clamp.

    Returns
    -------
    ProjectionResult with coefficients aligned to `predictors`.
    """
    predictors = [int(p) for p in predictors]
    if not predictors:
        raise InvalidParameter('The predictor set must be non-empty.')
    _check_indices(model, predictors + [target], 'Variable')

    sigma = model.sigma
    idx = np.asarray(predictors)
    block = sigma[np.ix_(idx, idx)]
    c = sigma[idx, target]
    coefficients = solve(cholesky(block), c)

    # residual must be uncorrelated with every predictor
    gap = np.max(np.abs(c - block @ coefficients))
    if gap > tol * max(1.0, np.max(np.abs(c))):
        raise SingularSubmatrix('Projection residual is correlated with the predictors (gap {:.3e}); '
                                'the predictor block is numerically singular.'.format(gap))

    var_t = sigma[target, target]
    res_var = clamp_variance(float(var_t - c @ coefficients), var_t, tol)
    r_squared = float(min(max(1. - res_var / var_t, 0.), 1.))
    return ProjectionResult(coefficients=coefficients, residual_variance=res_var, r_squared=r_squared)


def residual_covariance(model: CovarianceModel, a_set: Sequence[int], b_set: Sequence[int]) -> np.ndarray:
    """
    Covariance matrix of A^{perp B} (the Schur complement of Var(B)).
    """
    a_set, b_set = [int(i) for i in a_set], [int(i) for i in b_set]
    if not b_set:
        raise InvalidParameter('The conditioning set must be non-empty.')
    if set(a_set) & set(b_set):
        raise InvalidParameter('The two index sets must be disjoint.')
    _check_indices(model, a_set + b_set, 'Variable')
    return schur_complement(model.sigma, a_set, b_set)


def partial_r_squared(model: CovarianceModel, target: int, added: Sequence[int], controls: Sequence[int] = (),
                      degenerate_tolerance: float = DEGENERATE_TOLERANCE) -> float:
    """
    R-squared of target^{perp controls} on added^{perp controls}. With no controls it is the plain R-squared.
    """
    added, controls = [int(i) for i in added], [int(i) for i in controls]
    if not added:
        raise InvalidParameter('The added set must be non-empty.')
    if target in added or target in controls or set(added) & set(controls):
        raise InvalidParameter('Target, added and controls must be pairwise disjoint.')
    _check_indices(model, [target] + added + controls, 'Variable')
    return partial_r_squared_matrix(model.sigma, target, added, controls, degenerate_tolerance)
