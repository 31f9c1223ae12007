"""
Closed-form large-K limits of the sensitivity parameters and the classification of a limit curve as consistent
and monotone in selection.

Date: October 2026

r is the limiting ratio d2 / d1 of unobserved to observed covariates. c_pi and c_gamma are the limiting shares of the
index variances that come from the per-covariate variances.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from covsamp.errors import DegenerateIndex, InsufficientGrid, InvalidParameter


PROPERTY_TOLERANCE = 1e-9


@dataclass
class LimitPrediction:
    """
    Predicted limit of one parameter at selection ratio r.

    value is None when no limit is predicted for the parameter under the given structure.
    """
    param: str
    r: float
    inputs: dict = field(default_factory=dict)
    value: Optional[float] = None

    def to_dict(self):
        return {'param': self.param, 'r': self.r, 'inputs': self.inputs, 'value': self.value}


def _check_r(r):
    if not r > 0:
        raise InvalidParameter('The selection ratio r must be positive, got {}.'.format(r))


def _check_c(c):
    if not c >= 0:
        raise InvalidParameter('The c constant must be non-negative, got {}.'.format(c))


def limit_r_x(r: float, c_pi: float) -> float:
    _check_r(r)
    _check_c(c_pi)
    return math.sqrt(r * (r + c_pi) / (1 + r * c_pi))


def limit_r_y(r: float, c_gamma: float) -> float:
    return limit_r_x(r, c_gamma)


def limit_delta_orig(r: float, c_gamma: float) -> float:
    """
    Limit of the original delta. Equals 1 at r = 1, and for every r when c_gamma = 1.
    """
    _check_r(r)
    _check_c(c_gamma)
    return (1 + r * c_gamma) / (r + c_gamma)


def limit_delta_acet() -> float:
    """
    Limit of the delta with both sides residualized. Requires c_gamma > 0 and Cov(X, gamma'W) bounded away from zero.
    """
    return 1.


def limit_k_x(r: float, alpha: float, d_ex: float) -> float:
    """
    Limit of k_X under the shrinking exchangeable structure. Reduces to r at alpha = 0.
    """
    _check_r(r)
    if not alpha > -1:
        raise InvalidParameter('alpha must exceed -1, got {}.'.format(alpha))
    if not d_ex >= 1 - 1e-12:
        raise InvalidParameter('d_ex must be at least 1, got {}.'.format(d_ex))
    num = alpha * r**2 + d_ex * r * (1 + r + alpha)
    den = alpha * ((1 + r) * (1 + alpha) + r) + d_ex * (1 + r + alpha)
    return num / den


def delta_resid_finite_k(pi: Sequence[float], gamma: Sequence[float], r: float) -> float:
    """
    Leading-order value of the residualized delta for given coefficient vectors under an exchangeable structure.

    The limit depends on the coefficient sequences, so this is evaluated at finite K instead of being a single limit.
    """
    _check_r(r)
    pi, gamma = np.asarray(pi, dtype=float), np.asarray(gamma, dtype=float)
    if pi.shape != gamma.shape:
        raise InvalidParameter('pi and gamma must have the same length.')
    k = len(pi)
    s_pi, s_gamma = float(np.sum(pi)), float(np.sum(gamma))
    if abs(s_pi) <= 1e-8 or abs(s_gamma) <= 1e-8:
        raise DegenerateIndex('The coefficients sum to (almost) zero.')
    base = r * s_pi * s_gamma**2
    num = base + k * float(pi @ gamma) * s_gamma
    den = base + k * s_pi * float(gamma @ gamma)
    if abs(den) <= 1e-300:
        raise DegenerateIndex('The residualized delta expression has a zero denominator.')
    return num / den


def prop_c_value(kind: str, param: float, d: float) -> float:
    """
    Limiting c constant of a structure given its d constant.

    Parameters
    ----------
    kind : str
        MA1, AR1, Factor, Exchangeable or ExchangeableShrink.
    param : float
        rho for MA1, alpha for ExchangeableShrink, ignored otherwise.
    d : float
        The d constant of the coefficient sequence.
    """
    if kind == 'MA1':
        if not abs(param) < 0.5:
            raise InvalidParameter('MA1 needs |rho| < 1/2.')
        den = 1 + 2 * param * d
    elif kind == 'AR1':
        if not d > -1:
            raise InvalidParameter('The AR1 d constant must exceed -1.')
        den = 1 + d
    elif kind in ('Factor', 'Exchangeable'):
        return 0.
    elif kind == 'ExchangeableShrink':
        if not param > -1:
            raise InvalidParameter('alpha must exceed -1.')
        if not d >= 1 - 1e-12:
            raise InvalidParameter('The exchangeable d constant must be at least 1.')
        return d / (d + param)
    else:
        raise InvalidParameter('Unknown structure "{}".'.format(kind))
    if not den > 0:
        raise InvalidParameter('The d constant {} gives a non-positive variance share.'.format(d))
    return 1. / den


def property_check(limit_curve: Callable[[float], float], r_grid: Sequence[float],
                   tol: float = PROPERTY_TOLERANCE) -> dict:
    """
    Classify a limit curve r -> value.

    Consistent when |curve(1)| = 1. Monotone in selection when |curve(r)| > 1 for every r > 1 and < 1 for every r < 1
    in the grid.
    """
    r_grid = sorted(float(r) for r in r_grid)
    if not any(r < 1 for r in r_grid) or not any(r > 1 for r in r_grid):
        raise InsufficientGrid('The r grid must contain values on both sides of 1.')
    consistent = abs(abs(limit_curve(1.)) - 1) <= tol
    monotone = True
    for r in r_grid:
        value = abs(limit_curve(r))
        if r > 1 and not value > 1 + tol:
            monotone = False
        if r < 1 and not value < 1 - tol:
            monotone = False
    return {'consistent': bool(consistent), 'monotone_in_selection': bool(monotone)}
