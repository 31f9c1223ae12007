"""
Long-regression objects of a population covariance model: beta_long, gamma, pi, the medium regression coefficient of
a mask and the omitted variable bias.

Date: October 2026
"""

import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from covsamp.design import SelectionMask
from covsamp.errors import InvalidParameter
from covsamp.projection import CovarianceModel, IDX_X, IDX_Y, DEGENERATE_TOLERANCE, cholesky, project, solve


@dataclass(frozen=True, eq=False)
class Population:
    """
    A covariance model with its long regression coefficients.

    gamma and pi are the coefficients of W in the projections of Y on (X, W) and of X on W. The covariance blocks
    sigma_w = Var(W), c_x = Cov(W, X) and c_y = Cov(W, Y) are read-only views used by every per-mask computation.
    """
    cov: CovarianceModel
    beta_long: float
    gamma: np.ndarray
    pi: np.ndarray
    degenerate: bool = False
    sigma_w: np.ndarray = field(init=False, repr=False, compare=False)
    c_x: np.ndarray = field(init=False, repr=False, compare=False)
    c_y: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sigma = self.cov.sigma
        object.__setattr__(self, 'sigma_w', sigma[2:, 2:])
        object.__setattr__(self, 'c_x', sigma[2:, IDX_X])
        object.__setattr__(self, 'c_y', sigma[2:, IDX_Y])

    @property
    def k(self):
        return self.cov.k

    @property
    def var_x(self):
        return float(self.cov.sigma[IDX_X, IDX_X])

    @property
    def var_y(self):
        return float(self.cov.sigma[IDX_Y, IDX_Y])

    @property
    def cov_yx(self):
        return float(self.cov.sigma[IDX_Y, IDX_X])

    @property
    def var_pi_index(self):
        return float(self.pi @ self.sigma_w @ self.pi)

    @property
    def var_gamma_index(self):
        return float(self.gamma @ self.sigma_w @ self.gamma)

    @property
    def cov_x_gamma_index(self):
        return float(self.gamma @ self.c_x)

    @property
    def r2_x_w(self):
        """R-squared of X on every covariate."""
        return float(self.pi @ self.c_x) / self.var_x

    @property
    def r2_y_xw(self):
        """R-squared of the long regression."""
        explained = self.beta_long * self.cov_yx + float(self.gamma @ self.c_y)
        return explained / self.var_y


def derive_population(cov: CovarianceModel, degenerate_tolerance: float = DEGENERATE_TOLERANCE) -> Population:
    """
    Solve the long regression of Y on (X, W) and the projection of X on W.

    Populations whose gamma or pi index has (numerically) zero variance are built but flagged as degenerate; the
    sensitivity parameters then report failure codes.
    """
    k = cov.k
    w_idx = list(range(2, k + 2))
    long_fit = project(cov, IDX_Y, [IDX_X] + w_idx)
    x_fit = project(cov, IDX_X, w_idx)

    beta_long = float(long_fit.coefficients[0])
    gamma = np.array(long_fit.coefficients[1:])
    pi = np.array(x_fit.coefficients)
    gamma.setflags(write=False)
    pi.setflags(write=False)

    sigma_w = cov.sigma[2:, 2:]
    degenerate = bool(gamma @ sigma_w @ gamma <= degenerate_tolerance or pi @ sigma_w @ pi <= degenerate_tolerance)
    if degenerate:
        warnings.warn('The population has a gamma or pi index with zero variance; ratios that divide by it '
                      'will report failure codes.')
    return Population(cov=cov, beta_long=beta_long, gamma=gamma, pi=pi, degenerate=degenerate)


def _as_mask(mask):
    if isinstance(mask, SelectionMask):
        return mask
    return SelectionMask.from_bits(mask)


def beta_medium(pop: Population, mask: Union[SelectionMask, np.ndarray]) -> float:
    """
    Coefficient on X in the projection of Y on X and the observed covariates.
    """
    mask = _as_mask(mask)
    if mask.k != pop.k:
        raise InvalidParameter('The mask has {} entries for {} covariates.'.format(mask.k, pop.k))
    if mask.d1 == 0:
        return pop.cov_yx / pop.var_x
    predictors = [IDX_X] + [2 + i for i in mask.observed]
    return float(project(pop.cov, IDX_Y, predictors).coefficients[0])


def ovb(pop: Population, mask: Union[SelectionMask, np.ndarray]) -> float:
    """
    Omitted variable bias beta_med - beta_long.
    """
    mask = _as_mask(mask)
    if mask.d2 == 0:
        return 0.
    return beta_medium(pop, mask) - pop.beta_long


def ovb_formula(pop: Population, mask: Union[SelectionMask, np.ndarray]) -> float:
    """
    Omitted variable bias from the textbook formula Cov(X^{perp W_1}, gamma_2'W_2) / Var(X^{perp W_1}).
    """
    mask = _as_mask(mask)
    o, u = mask.observed_index, mask.unobserved_index
    g2 = pop.gamma[u]
    cov_x_b = float(pop.c_x[u] @ g2)
    if mask.d1 == 0:
        return cov_x_b / pop.var_x
    factor = cholesky(pop.sigma_w[np.ix_(o, o)])
    cx1 = pop.c_x[o]
    h = solve(factor, cx1)
    var_x_perp = pop.var_x - float(cx1 @ h)
    cov_perp = cov_x_b - float(h @ (pop.sigma_w[np.ix_(o, u)] @ g2))
    return cov_perp / var_x_perp


def population_summary(pop: Population) -> dict:
    """
    Scalars that describe a population, for output documents.
    """
    return {'k': pop.k,
            'labels': list(pop.cov.labels),
            'beta_long': pop.beta_long,
            'r2_x_w': pop.r2_x_w,
            'r2_y_xw': pop.r2_y_xw,
            'var_pi_index': pop.var_pi_index,
            'var_gamma_index': pop.var_gamma_index,
            'cov_x_gamma_index': pop.cov_x_gamma_index,
            'c_pi': c_ratio(pop.pi, pop.sigma_w),
            'c_gamma': c_ratio(pop.gamma, pop.sigma_w),
            'degenerate': pop.degenerate,
            }


def c_ratio(coef, sigma_w):
    """
    Sum of the per-covariate index variances over the index variance, or None if the index is degenerate.
    """
    total = float(coef @ sigma_w @ coef)
    if total <= DEGENERATE_TOLERANCE:
        return None
    return float(np.sum(coef**2 * np.diag(sigma_w))) / total
