"""
Sensitivity parameters (selection ratios) as functions of a population and a selection mask.

Date: October 2026

Every parameter compares the unobserved covariates W_2 with the observed covariates W_1 of a mask. All of them are
built from slices of the population covariance matrix, sharing one Cholesky factorization of Var(W_1) per mask.

Undefined ratios are never returned as NaN or infinity: the evaluation then carries a FailureCode instead of a value.
Signs are kept; absolute values are taken by the sampling engine.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, List, Optional

import numpy as np

from covsamp.design import SelectionMask, check_design
from covsamp.errors import DegenerateTarget, InternalConsistency, InvalidParameter, SingularSubmatrix
from covsamp.population import Population
from covsamp.projection import DEGENERATE_TOLERANCE, cholesky, partial_r_squared_matrix, solve


class ParamId(Enum):
    DELTA_ORIG = 'DeltaOrig'
    DELTA_RESID = 'DeltaResid'
    DELTA_ACET = 'DeltaAcet'
    RX = 'RX'
    RY = 'RY'
    KX = 'KX'
    KY = 'KY'
    KX_ALT = 'KXAlt'
    KY_ALT = 'KYAlt'
    KY_ALT2 = 'KYAlt2'
    LAMBDA_KRAUTH = 'LambdaKrauth'
    DELTA_TILDE = 'DeltaTilde'


LITERATURE_PARAMS = tuple(p for p in ParamId if p is not ParamId.DELTA_TILDE)
DEFAULT_PARAMS = (ParamId.RX, ParamId.RY, ParamId.KX, ParamId.DELTA_ORIG, ParamId.DELTA_ACET, ParamId.DELTA_RESID)
ABS_BY_DEFAULT = frozenset({ParamId.DELTA_ORIG, ParamId.DELTA_RESID, ParamId.DELTA_ACET, ParamId.LAMBDA_KRAUTH,
                            ParamId.DELTA_TILDE})
# scalar-only in the literature, evaluated here with gamma indices
NON_CANONICAL = frozenset({ParamId.LAMBDA_KRAUTH})
RECIPROCAL_PARAMS = frozenset({ParamId.DELTA_ORIG, ParamId.DELTA_ACET, ParamId.RX, ParamId.RY})


class FailureCode(Enum):
    ZERO_DENOMINATOR = 'ZeroDenominator'
    DEGENERATE_INDEX = 'DegenerateIndex'
    SINGULAR_SPLIT = 'SingularSplit'


@dataclass(frozen=True)
class ParamEval:
    id: ParamId
    value: Optional[float] = None
    failure: Optional[FailureCode] = None

    @property
    def ok(self):
        return self.failure is None


def parse_params(names: Iterable[str]) -> tuple:
    """
    Map names ("RX", "DeltaResid", ... or "all") to ParamIds, keeping order and dropping repeats.
    """
    out = []
    for name in names:
        if name == 'all':
            candidates = list(ParamId)
        else:
            try:
                candidates = [ParamId(name)]
            except ValueError:
                raise InvalidParameter('Unknown parameter "{}". Available: {}.'.format(
                    name, ', '.join(p.value for p in ParamId)))
        out.extend(p for p in candidates if p not in out)
    return tuple(out)


class _Undefined(Exception):
    def __init__(self, code):
        super().__init__(code.value)
        self.code = code


class SplitView:
    """
    Blocks of the population sliced by a mask, plus lazily computed solves against Var(W_1) and Var(W_2).

    Index 1 is the observed side, index 2 the unobserved side.
    """

    def __init__(self, pop: Population, mask: SelectionMask, degenerate_tolerance: float = DEGENERATE_TOLERANCE):
        if mask.k != pop.k:
            raise InvalidParameter('The mask has {} entries for {} covariates.'.format(mask.k, pop.k))
        check_design(mask.k, mask.d1)
        self.pop = pop
        self.mask = mask
        self.tol = degenerate_tolerance
        self.o = mask.observed_index
        self.u = mask.unobserved_index

    @cached_property
    def gamma_1(self):
        return self.pop.gamma[self.o]

    @cached_property
    def gamma_2(self):
        return self.pop.gamma[self.u]

    @cached_property
    def pi_1(self):
        return self.pop.pi[self.o]

    @cached_property
    def pi_2(self):
        return self.pop.pi[self.u]

    @cached_property
    def var_w1(self):
        return self.pop.sigma_w[np.ix_(self.o, self.o)]

    @cached_property
    def var_w2(self):
        return self.pop.sigma_w[np.ix_(self.u, self.u)]

    @cached_property
    def cov_w1_w2(self):
        return self.pop.sigma_w[np.ix_(self.o, self.u)]

    @cached_property
    def cov_x_w1(self):
        return self.pop.c_x[self.o]

    @cached_property
    def cov_x_w2(self):
        return self.pop.c_x[self.u]

    @cached_property
    def cov_y_w1(self):
        return self.pop.c_y[self.o]

    @cached_property
    def cov_y_w2(self):
        return self.pop.c_y[self.u]

    # gamma indices a = gamma_1'W_1 and b = gamma_2'W_2

    @cached_property
    def var_a(self):
        return float(self.gamma_1 @ self.var_w1 @ self.gamma_1)

    @cached_property
    def var_b(self):
        return float(self.gamma_2 @ self.var_w2 @ self.gamma_2)

    @cached_property
    def cov_w1_b(self):
        return self.cov_w1_w2 @ self.gamma_2

    @cached_property
    def cov_a_b(self):
        return float(self.gamma_1 @ self.cov_w1_b)

    @cached_property
    def cov_x_a(self):
        return float(self.gamma_1 @ self.cov_x_w1)

    @cached_property
    def cov_x_b(self):
        return float(self.gamma_2 @ self.cov_x_w2)

    # solves against Var(W_1) and Var(W_2)

    @cached_property
    def factor_w1(self):
        try:
            return cholesky(self.var_w1)
        except SingularSubmatrix:
            raise _Undefined(FailureCode.SINGULAR_SPLIT)

    @cached_property
    def factor_w2(self):
        try:
            return cholesky(self.var_w2)
        except SingularSubmatrix:
            raise _Undefined(FailureCode.SINGULAR_SPLIT)

    @cached_property
    def phi(self):
        """Coefficients of W_1 in the projection of gamma_2'W_2 on W_1."""
        return solve(self.factor_w1, self.cov_w1_b)

    @cached_property
    def h_x1(self):
        return solve(self.factor_w1, self.cov_x_w1)

    @cached_property
    def h_y1(self):
        return solve(self.factor_w1, self.cov_y_w1)

    @cached_property
    def r2_x_w1(self):
        return float(self.cov_x_w1 @ self.h_x1) / self.pop.var_x

    @cached_property
    def r2_x_w2(self):
        return float(self.cov_x_w2 @ solve(self.factor_w2, self.cov_x_w2)) / self.pop.var_x

    @cached_property
    def resid_numerator(self):
        """Cov(X, (gamma_2'W_2)^{perp W_1}) and Var((gamma_2'W_2)^{perp W_1})."""
        cov = self.cov_x_b - float(self.phi @ self.cov_x_w1)
        var = max(self.var_b - float(self.phi @ self.cov_w1_b), 0.)
        return cov, var

    @cached_property
    def adjusted_denominator(self):
        """Cov(X, (gamma_1 + phi)'W_1) and Var((gamma_1 + phi)'W_1)."""
        w = self.gamma_1 + self.phi
        return float(w @ self.cov_x_w1), float(w @ self.var_w1 @ w)

    def resid_var_y_x_w(self, side):
        """Var(Y^{perp X, W_side}), by partialling X out of the residuals on W_side."""
        pop = self.pop
        if side == 1:
            cx, cy = self.cov_x_w1, self.cov_y_w1
            hx, hy = self.h_x1, self.h_y1
        else:
            cx, cy = self.cov_x_w2, self.cov_y_w2
            hx, hy = solve(self.factor_w2, cx), solve(self.factor_w2, cy)
        rv_x = pop.var_x - float(cx @ hx)
        rv_y = pop.var_y - float(cy @ hy)
        c_yx = pop.cov_yx - float(cy @ hx)
        return max(rv_y - c_yx**2 / rv_x, 0.)

    @cached_property
    def resid_var_y_x(self):
        pop = self.pop
        return pop.var_y - pop.cov_yx**2 / pop.var_x

    @cached_property
    def resid_var_y_xw(self):
        return max(self.pop.var_y * (1. - self.pop.r2_y_xw), 0.)


def _check(value, tol, code=FailureCode.ZERO_DENOMINATOR):
    if abs(value) <= tol:
        raise _Undefined(code)


def _delta_orig(v):
    _check(v.var_a, v.tol)
    _check(v.var_b, v.tol)
    _check(v.cov_x_a, v.tol)
    return (v.cov_x_b / v.var_b) / (v.cov_x_a / v.var_a)


def _delta_resid(v):
    num_cov, num_var = v.resid_numerator
    den_cov, den_var = v.adjusted_denominator
    _check(num_var, v.tol)
    _check(den_var, v.tol)
    _check(den_cov, v.tol)
    return (num_cov / num_var) / (den_cov / den_var)


def _delta_tilde(v):
    num_cov, num_var = v.resid_numerator
    _check(num_var, v.tol)
    _check(v.var_a, v.tol)
    _check(v.cov_x_a, v.tol)
    return (num_cov / num_var) / (v.cov_x_a / v.var_a)


def _delta_acet(v):
    va, vb, cab = v.var_a, v.var_b, v.cov_a_b
    _check(va, v.tol, FailureCode.DEGENERATE_INDEX)
    _check(vb, v.tol, FailureCode.DEGENERATE_INDEX)
    num_var = vb - cab**2 / va
    den_var = va - cab**2 / vb
    _check(max(num_var, 0.), v.tol, FailureCode.DEGENERATE_INDEX)
    _check(max(den_var, 0.), v.tol, FailureCode.DEGENERATE_INDEX)
    num_cov = v.cov_x_b - cab / va * v.cov_x_a
    den_cov = v.cov_x_a - cab / vb * v.cov_x_b
    _check(den_cov, v.tol)
    return (num_cov / num_var) / (den_cov / den_var)


def _index_ratio(coef_1, coef_2, v):
    var_1 = float(coef_1 @ v.var_w1 @ coef_1)
    var_2 = max(float(coef_2 @ v.var_w2 @ coef_2), 0.)
    _check(var_1, v.tol, FailureCode.DEGENERATE_INDEX)
    return math.sqrt(var_2 / var_1)


def _r_x(v):
    return _index_ratio(v.pi_1, v.pi_2, v)


def _r_y(v):
    return _index_ratio(v.gamma_1, v.gamma_2, v)


def _k_x(v):
    r2_1 = v.r2_x_w1
    _check(r2_1, v.tol)
    return max(v.pop.r2_x_w - r2_1, 0.) / r2_1


def _k_y(v):
    pop = v.pop
    base = v.resid_var_y_x
    den = (base - v.resid_var_y_x_w(1)) / base
    _check(den, v.tol)

    # covariance of (Y, X, W_2^{perp W_1})
    b = solve(v.factor_w1, v.cov_w1_w2)
    d2 = len(v.u)
    m = np.empty((d2 + 2, d2 + 2))
    m[0, 0], m[1, 1] = pop.var_y, pop.var_x
    m[0, 1] = m[1, 0] = pop.cov_yx
    m[0, 2:] = m[2:, 0] = v.cov_y_w2 - b.T @ v.cov_y_w1
    m[1, 2:] = m[2:, 1] = v.cov_x_w2 - b.T @ v.cov_x_w1
    var_z = v.var_w2 - v.cov_w1_w2.T @ b
    m[2:, 2:] = (var_z + var_z.T) / 2
    num = partial_r_squared_matrix(m, 0, range(2, d2 + 2), [1], v.tol)
    return num / den


def _k_x_alt(v):
    r2_1 = v.r2_x_w1
    _check(r2_1, v.tol)
    return v.r2_x_w2 / r2_1


def _k_y_alt(v):
    var_y = v.pop.var_y
    r2_1 = 1. - v.resid_var_y_x_w(1) / var_y
    r2_2 = 1. - v.resid_var_y_x_w(2) / var_y
    _check(r2_1, v.tol)
    return r2_2 / r2_1


def _k_y_alt2(v):
    var_y = v.pop.var_y
    rv_1 = v.resid_var_y_x_w(1)
    num = max(rv_1 - v.resid_var_y_xw, 0.) / var_y
    den = (v.resid_var_y_x - rv_1) / var_y
    _check(den, v.tol)
    return num / den


def _lambda_krauth(v):
    num_cov, num_var = v.resid_numerator
    den_cov, den_var = v.adjusted_denominator
    _check(num_var, v.tol, FailureCode.DEGENERATE_INDEX)
    _check(den_var, v.tol, FailureCode.DEGENERATE_INDEX)
    _check(den_cov, v.tol)
    return (num_cov / math.sqrt(num_var)) / (den_cov / math.sqrt(den_var))


_EVALUATORS = {
    ParamId.DELTA_ORIG: _delta_orig,
    ParamId.DELTA_RESID: _delta_resid,
    ParamId.DELTA_ACET: _delta_acet,
    ParamId.RX: _r_x,
    ParamId.RY: _r_y,
    ParamId.KX: _k_x,
    ParamId.KY: _k_y,
    ParamId.KX_ALT: _k_x_alt,
    ParamId.KY_ALT: _k_y_alt,
    ParamId.KY_ALT2: _k_y_alt2,
    ParamId.LAMBDA_KRAUTH: _lambda_krauth,
    ParamId.DELTA_TILDE: _delta_tilde,
}


def split(pop: Population, mask: SelectionMask, degenerate_tolerance: float = DEGENERATE_TOLERANCE) -> SplitView:
    return SplitView(pop, mask, degenerate_tolerance)


def evaluate_view(view: SplitView, pid: ParamId) -> ParamEval:
    try:
        value = float(_EVALUATORS[pid](view))
    except _Undefined as e:
        return ParamEval(id=pid, failure=e.code)
    except (SingularSubmatrix, InternalConsistency):
        return ParamEval(id=pid, failure=FailureCode.SINGULAR_SPLIT)
    except DegenerateTarget:
        return ParamEval(id=pid, failure=FailureCode.ZERO_DENOMINATOR)
    if not math.isfinite(value):
        return ParamEval(id=pid, failure=FailureCode.ZERO_DENOMINATOR)
    return ParamEval(id=pid, value=value)


def evaluate(pop: Population, mask: SelectionMask, ids: Iterable[ParamId],
             degenerate_tolerance: float = DEGENERATE_TOLERANCE) -> List[ParamEval]:
    """
    Evaluate several parameters on one mask, sharing the sliced blocks and factorizations.

    Failures of one parameter never stop the others.
    """
    ids = list(ids)
    if not ids:
        return []
    view = SplitView(pop, mask, degenerate_tolerance)
    return [evaluate_view(view, pid) for pid in ids]


def _single(pid, name):
    def param_fn(pop, mask, degenerate_tolerance=DEGENERATE_TOLERANCE):
        return evaluate_view(SplitView(pop, mask, degenerate_tolerance), pid)
    param_fn.__name__ = param_fn.__qualname__ = name
    param_fn.__doc__ = 'Evaluate {} on one mask.'.format(pid.value)
    return param_fn


delta_orig = _single(ParamId.DELTA_ORIG, 'delta_orig')
delta_resid = _single(ParamId.DELTA_RESID, 'delta_resid')
delta_acet = _single(ParamId.DELTA_ACET, 'delta_acet')
delta_tilde = _single(ParamId.DELTA_TILDE, 'delta_tilde')
r_x = _single(ParamId.RX, 'rx')
r_y = _single(ParamId.RY, 'ry')
k_x = _single(ParamId.KX, 'kx')
k_y = _single(ParamId.KY, 'ky')
k_x_alt = _single(ParamId.KX_ALT, 'kx_alt')
k_y_alt = _single(ParamId.KY_ALT, 'ky_alt')
k_y_alt2 = _single(ParamId.KY_ALT2, 'ky_alt2')
lambda_krauth = _single(ParamId.LAMBDA_KRAUTH, 'lambda_krauth')
