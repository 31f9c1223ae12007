"""
Synthetic data generating processes: covariance structures for the covariates, coefficient sequences for pi and gamma,
population assembly and numerical checks of the large-K assumptions.

Date: October 2026

Structures
----------
MA1                 1 on the diagonal, rho next to it (|rho| < 1/2)
AR1                 rho^|i - j| (|rho| < 1)
Factor              Lambda Lambda' + sigma_e2 I
Exchangeable        rho off the diagonal, i.e. Factor with one factor of loading sqrt(rho) and sigma_e2 = 1 - rho
ExchangeableShrink  alpha / K off the diagonal (-1 < alpha < K)
"""

import warnings
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from covsamp import limits
from covsamp.design import double_sum_variance
from covsamp.errors import DegenerateIndex, InvalidParameter
from covsamp.population import Population, derive_population
from covsamp.projection import DEGENERATE_TOLERANCE, CovarianceModel


COV_X_INDEX_WARNING = 0.05


@dataclass(frozen=True)
class MA1:
    rho: float
    kind = 'MA1'


@dataclass(frozen=True)
class AR1:
    rho: float
    kind = 'AR1'


@dataclass(frozen=True)
class Factor:
    """
    loadings is either one loading per factor (shared by every covariate) or a K x R matrix.
    """
    loadings: Tuple
    sigma_e2: float
    kind = 'Factor'


@dataclass(frozen=True)
class Exchangeable:
    rho: float
    kind = 'Exchangeable'


@dataclass(frozen=True)
class ExchangeableShrink:
    alpha: float
    kind = 'ExchangeableShrink'


Structure = Union[MA1, AR1, Factor, Exchangeable, ExchangeableShrink]


@dataclass(frozen=True)
class Flat:
    """
    Every coefficient equals c / sqrt(K) (rate "sqrt") or c / K (rate "linear"). No rate means: pick by structure.
    """
    c: float = 1.0
    rate: Optional[str] = None


@dataclass(frozen=True)
class Alternating:
    c: float = 1.0
    rate: Optional[str] = None


@dataclass(frozen=True)
class Corollary1:
    """
    Sequences under which the residualized delta converges to target_c for the given ratio r.
    """
    target_c: float = 3.0
    r: float = 1.0


@dataclass(frozen=True)
class Explicit:
    vector: Tuple[float, ...] = ()


CoefficientRule = Union[Flat, Alternating, Corollary1, Explicit]


@dataclass(frozen=True)
class DgpSpec:
    structure: Structure
    pi_rule: CoefficientRule = field(default_factory=Flat)
    gamma_rule: CoefficientRule = field(default_factory=Flat)
    x_resid_var: float = 1.0
    y_resid_var: float = 1.0
    beta_long: float = 1.0

    def to_dict(self):
        out = {'structure': dict(asdict(self.structure), kind=self.structure.kind)}
        for name in ('pi_rule', 'gamma_rule'):
            rule = getattr(self, name)
            out[name] = dict(asdict(rule), kind=type(rule).__name__)
        out.update(x_resid_var=self.x_resid_var, y_resid_var=self.y_resid_var, beta_long=self.beta_long)
        return out

    @classmethod
    def from_conf(cls, dgp_conf):
        """
        Build a spec from the `dgp` group of a configuration dict.
        """
        kind = dgp_conf['structure']
        if kind == 'MA1':
            structure = MA1(rho=dgp_conf['rho'])
        elif kind == 'AR1':
            structure = AR1(rho=dgp_conf['rho'])
        elif kind == 'Factor':
            structure = Factor(loadings=loadings_from_conf(dgp_conf['loadings'], dgp_conf.get('k')),
                               sigma_e2=dgp_conf['sigma_e2'])
        elif kind == 'Exchangeable':
            structure = Exchangeable(rho=dgp_conf['rho'])
        elif kind == 'ExchangeableShrink':
            structure = ExchangeableShrink(alpha=dgp_conf['alpha'])
        else:
            raise InvalidParameter('Unknown covariance structure "{}".'.format(kind))

        def rule(prefix):
            name = dgp_conf['{}_rule'.format(prefix)]
            rate = dgp_conf['{}_rate'.format(prefix)]
            rate = None if rate == 'auto' else rate
            if name == 'Flat':
                return Flat(c=dgp_conf['{}_c'.format(prefix)], rate=rate)
            if name == 'Alternating':
                return Alternating(c=dgp_conf['{}_c'.format(prefix)], rate=rate)
            if name == 'Corollary1':
                return Corollary1(target_c=dgp_conf['target_c'], r=dgp_conf['target_r'])
            if name == 'Explicit':
                vector = dgp_conf['{}_vector'.format(prefix)]
                if not vector:
                    raise InvalidParameter('The Explicit rule for {} needs {}_vector.'.format(prefix, prefix))
                return Explicit(vector=tuple(vector))
            raise InvalidParameter('Unknown coefficient rule "{}".'.format(name))

        return cls(structure=structure, pi_rule=rule('pi'), gamma_rule=rule('gamma'),
                   x_resid_var=dgp_conf['x_resid_var'], y_resid_var=dgp_conf['y_resid_var'],
                   beta_long=dgp_conf['beta_long'])


def loadings_from_conf(raw, k=None):
    """
    Factor loadings from a configuration value: a flat list (one loading per factor, shared by every covariate) or a
    nested K x R list (one row per covariate).
    """
    if not isinstance(raw, (list, tuple)) or len(raw) == 0:
        raise InvalidParameter('Factor loadings must be a non-empty list, got {!r}.'.format(raw))
    nested = [isinstance(row, (list, tuple)) for row in raw]
    if not any(nested):
        return _floats(raw)
    if not all(nested):
        raise InvalidParameter('Factor loadings mix numbers and rows.')
    widths = {len(row) for row in raw}
    if len(widths) != 1 or 0 in widths:
        raise InvalidParameter('Every row of the factor loadings needs the same, positive number of factors, '
                               'got row lengths {}.'.format(sorted(widths)))
    if k is not None and len(raw) != k:
        raise InvalidParameter('Factor loadings have {} rows for K={}; a loading matrix must be K x R.'.format(
            len(raw), k))
    return tuple(_floats(row) for row in raw)


def _floats(values):
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise InvalidParameter('Factor loadings must be numbers, got {!r}.'.format(values))


def check_structure(structure, k):
    if isinstance(structure, MA1) and not abs(structure.rho) < 0.5:
        raise InvalidParameter('MA1 needs |rho| < 1/2, got {}.'.format(structure.rho))
    if isinstance(structure, AR1) and not abs(structure.rho) < 1:
        raise InvalidParameter('AR1 needs |rho| < 1, got {}.'.format(structure.rho))
    if isinstance(structure, Exchangeable) and not 0 < structure.rho < 1:
        raise InvalidParameter('Exchangeable needs 0 < rho < 1, got {}.'.format(structure.rho))
    if isinstance(structure, ExchangeableShrink) and not -1 < structure.alpha < k:
        raise InvalidParameter('ExchangeableShrink needs -1 < alpha < K, got alpha={} and K={}.'.format(
            structure.alpha, k))
    if isinstance(structure, Factor):
        if not structure.sigma_e2 > 0:
            raise InvalidParameter('Factor needs sigma_e2 > 0, got {}.'.format(structure.sigma_e2))
        if len(structure.loadings) == 0:
            raise InvalidParameter('Factor needs at least one loading.')


def factor_loadings(structure, k):
    loadings = np.asarray(structure.loadings, dtype=float)
    if loadings.ndim == 1:
        return np.tile(loadings, (k, 1))
    if loadings.shape[0] != k:
        raise InvalidParameter('Factor loadings have {} rows for K={}.'.format(loadings.shape[0], k))
    return loadings


def build_cov(structure: Structure, k: int) -> np.ndarray:
    """
    Var(W) of the given structure for K covariates.
    """
    if k < 1:
        raise InvalidParameter('K must be positive.')
    check_structure(structure, k)
    if isinstance(structure, MA1):
        first = np.zeros(k)
        first[0] = 1.
        if k > 1:
            first[1] = structure.rho
        return linalg.toeplitz(first)
    if isinstance(structure, AR1):
        return linalg.toeplitz(structure.rho ** np.arange(k, dtype=float))
    if isinstance(structure, Exchangeable):
        return build_cov(Factor(loadings=(np.sqrt(structure.rho),), sigma_e2=1. - structure.rho), k)
    if isinstance(structure, Factor):
        lam = factor_loadings(structure, k)
        return lam @ lam.T + structure.sigma_e2 * np.eye(k)
    if isinstance(structure, ExchangeableShrink):
        a = structure.alpha / k
        return (1. - a) * np.eye(k) + a * np.ones((k, k))
    raise InvalidParameter('Unknown covariance structure {!r}.'.format(structure))


def _rate(rule, structure):
    rate = rule.rate
    if rate is None:
        rate = 'linear' if isinstance(structure, (Factor, Exchangeable)) else 'sqrt'
    if rate not in ('sqrt', 'linear'):
        raise InvalidParameter('Unknown coefficient rate "{}".'.format(rate))
    return rate


def build_coefficients(rule: CoefficientRule, k: int, role: str = 'pi', structure: Structure = None) -> np.ndarray:
    """
    Coefficient vector of length K.

    Parameters
    ----------
    rule : CoefficientRule
    k : int
    role : str
        "pi" or "gamma". Only the Corollary1 rule tells them apart.
    structure : Structure
        Used to pick the default rate of the Flat and Alternating rules.
    """
    if k < 2:
        raise InvalidParameter('Coefficient sequences need K >= 2.')
    if role not in ('pi', 'gamma'):
        raise InvalidParameter('role must be "pi" or "gamma".')

    if isinstance(rule, (Flat, Alternating)):
        scale = np.sqrt(k) if _rate(rule, structure) == 'sqrt' else k
        coef = np.full(k, rule.c / scale)
        if isinstance(rule, Alternating):
            coef[1::2] *= -1
        return coef

    if isinstance(rule, Corollary1):
        c_prime = rule.target_c * (rule.r + 2) - rule.r
        even = (np.arange(1, k + 1) % 2 == 0)
        if role == 'gamma':
            return np.where(even, 2. / k, 0.)
        return np.where(even, c_prime / k, (2. - c_prime) / k)

    if isinstance(rule, Explicit):
        vector = np.asarray(rule.vector, dtype=float)
        if len(vector) > k:
            raise InvalidParameter('Explicit vector has {} entries for K={}.'.format(len(vector), k))
        out = np.zeros(k)
        out[:len(vector)] = vector
        return out

    raise InvalidParameter('Unknown coefficient rule {!r}.'.format(rule))


def covariance_from_coefficients(sigma_w, pi, gamma, beta_long=1.0, x_resid_var=1.0, y_resid_var=1.0) -> np.ndarray:
    """
    Covariance matrix of (Y, X, W) when X = pi'W + u and Y = beta_long X + gamma'W + e, with u and e uncorrelated
    with W and with each other.
    """
    if not x_resid_var > 0 or not y_resid_var > 0:
        raise InvalidParameter('Residual variances must be positive.')
    sigma_w = np.asarray(sigma_w, dtype=float)
    pi, gamma = np.asarray(pi, dtype=float), np.asarray(gamma, dtype=float)
    k = sigma_w.shape[0]
    beta = beta_long

    c_x = sigma_w @ pi
    c_g = sigma_w @ gamma
    var_x = float(pi @ c_x) + x_resid_var
    cov_x_gw = float(gamma @ c_x)
    c_y = beta * c_x + c_g
    cov_yx = beta * var_x + cov_x_gw
    var_y = beta**2 * var_x + 2 * beta * cov_x_gw + float(gamma @ c_g) + y_resid_var

    if abs(cov_x_gw) < COV_X_INDEX_WARNING:
        warnings.warn('|Cov(X, gamma\'W)| = {:.4f} is close to zero at K={}; the delta parameters divide by '
                      'pieces of it.'.format(abs(cov_x_gw), k))

    sigma = np.empty((k + 2, k + 2))
    sigma[0, 0], sigma[1, 1] = var_y, var_x
    sigma[0, 1] = sigma[1, 0] = cov_yx
    sigma[0, 2:] = sigma[2:, 0] = c_y
    sigma[1, 2:] = sigma[2:, 1] = c_x
    sigma[2:, 2:] = sigma_w
    return sigma


def assemble_population(spec: DgpSpec, k: int) -> Population:
    """
    Population implied by the spec for K covariates.
    """
    sigma_w = build_cov(spec.structure, k)
    pi = build_coefficients(spec.pi_rule, k, 'pi', spec.structure)
    gamma = build_coefficients(spec.gamma_rule, k, 'gamma', spec.structure)
    sigma = covariance_from_coefficients(sigma_w, pi, gamma, spec.beta_long, spec.x_resid_var, spec.y_resid_var)
    return derive_population(CovarianceModel.from_matrix(sigma))


def _index_ratio(coef, sigma_w):
    total = float(coef @ sigma_w @ coef)
    if total <= DEGENERATE_TOLERANCE:
        raise DegenerateIndex('The index has variance {:.3e}.'.format(total))
    return float(np.sum(coef**2 * np.diag(sigma_w))) / total


def c_constants(spec: DgpSpec, k: int) -> Tuple[float, float]:
    """
    Finite-K (c_pi, c_gamma): summed per-covariate index variances over the index variance.
    """
    sigma_w = build_cov(spec.structure, k)
    pi = build_coefficients(spec.pi_rule, k, 'pi', spec.structure)
    gamma = build_coefficients(spec.gamma_rule, k, 'gamma', spec.structure)
    return _index_ratio(pi, sigma_w), _index_ratio(gamma, sigma_w)


def _d_constant(coef, structure, sigma_w):
    sq = float(np.sum(coef**2))
    if sq <= DEGENERATE_TOLERANCE:
        raise DegenerateIndex('The coefficient vector is zero.')
    if isinstance(structure, MA1):
        return float(coef[:-1] @ coef[1:]) / sq
    if isinstance(structure, AR1):
        return (float(coef @ sigma_w @ coef) - sq) / sq
    if isinstance(structure, (Exchangeable, ExchangeableShrink)):
        total = float(np.sum(coef))**2
        if total <= DEGENERATE_TOLERANCE:
            raise DegenerateIndex('The coefficients sum to zero.')
        return len(coef) * sq / total
    raise InvalidParameter('The {} structure has no d constant.'.format(structure.kind))


def d_constants(spec: DgpSpec, k: int) -> Tuple[float, float]:
    """
    Finite-K (d_pi, d_gamma) of the MA1, AR1 and exchangeable structures.
    """
    sigma_w = build_cov(spec.structure, k)
    pi = build_coefficients(spec.pi_rule, k, 'pi', spec.structure)
    gamma = build_coefficients(spec.gamma_rule, k, 'gamma', spec.structure)
    return _d_constant(pi, spec.structure, sigma_w), _d_constant(gamma, spec.structure, sigma_w)


def structure_parameter(structure):
    """
    The scalar that enters the limiting c constants: rho for MA1/AR1/Exchangeable, alpha for ExchangeableShrink.
    """
    if isinstance(structure, ExchangeableShrink):
        return structure.alpha
    if isinstance(structure, Factor):
        return 0.
    return structure.rho


@dataclass
class AssumptionReport:
    """
    Trajectories of the assumption diagnostics along a K grid and their pass/fail verdicts.
    """
    k_grid: List[int]
    var_bound: float
    var_bounds: List[dict]
    lln_variances: List[dict]
    c_pi: List[Optional[float]]
    c_gamma: List[Optional[float]]
    c_limits: List[dict]
    outlier_sums: List[dict]
    d_constants: List[Optional[dict]]
    checks: dict

    @property
    def passed(self):
        return all(self.checks.values())

    def to_dict(self):
        out = asdict(self)
        out['passed'] = self.passed
        return out


def _shrinks(values, rel=1e-6):
    """
    Non-increasing along the grid and strictly smaller at the end than at the start.
    """
    values = [v for v in values if v is not None]
    if len(values) < 2:
        return False
    steps_ok = all(b <= a * (1 + rel) + 1e-300 for a, b in zip(values, values[1:]))
    return steps_ok and values[-1] < values[0] * (1 - rel)


def validate_assumptions(spec: DgpSpec, k_grid: List[int], var_bound: float = 100.0, r: float = 1.0) -> AssumptionReport:
    """
    Measure the large-K assumptions of the spec along an increasing K grid.

    Parameters
    ----------
    spec : DgpSpec
    k_grid : list of int
        Increasing covariate counts.
    var_bound : float
        D in the requirement 1/D < Var(index) < D.
    r : float
        Ratio d2 / d1 used for the selection variances (d1 = round(K / (1 + r))).
    """
    k_grid = [int(k) for k in k_grid]
    if not k_grid or any(b <= a for a, b in zip(k_grid, k_grid[1:])):
        raise InvalidParameter('The K grid must be non-empty and increasing.')
    if not var_bound > 1:
        raise InvalidParameter('The variance bound D must exceed 1.')

    var_bounds, lln, c_pi, c_gamma, c_lim, outliers, d_list = [], [], [], [], [], [], []
    for k in k_grid:
        sigma_w = build_cov(spec.structure, k)
        pi = build_coefficients(spec.pi_rule, k, 'pi', spec.structure)
        gamma = build_coefficients(spec.gamma_rule, k, 'gamma', spec.structure)
        var_pi, var_gamma = float(pi @ sigma_w @ pi), float(gamma @ sigma_w @ gamma)
        var_bounds.append({'k': k, 'var_pi': var_pi, 'var_gamma': var_gamma,
                           'pass': all(1. / var_bound < v < var_bound for v in (var_pi, var_gamma))})

        d1 = min(max(int(round(k / (1 + r))), 1), k - 1)
        a_pi = np.outer(pi, pi) * sigma_w
        a_gamma = np.outer(gamma, gamma) * sigma_w
        lln.append({'k': k, 'd1': d1,
                    'pi_observed': double_sum_variance(a_pi, d1),
                    'pi_unobserved': double_sum_variance(a_pi, k - d1),
                    'gamma_observed': double_sum_variance(a_gamma, d1),
                    'gamma_unobserved': double_sum_variance(a_gamma, k - d1)})

        try:
            c_pi.append(_index_ratio(pi, sigma_w))
        except DegenerateIndex:
            c_pi.append(None)
        try:
            c_gamma.append(_index_ratio(gamma, sigma_w))
        except DegenerateIndex:
            c_gamma.append(None)

        c_x = sigma_w @ pi
        c_g = sigma_w @ gamma
        outliers.append({'k': k,
                         'x': float(np.sum((gamma * c_x)**2)),
                         'gamma_index': float(np.sum((gamma * c_g)**2))})

        try:
            d_pi, d_gamma = _d_constant(pi, spec.structure, sigma_w), _d_constant(gamma, spec.structure, sigma_w)
            d_list.append({'k': k, 'd_pi': d_pi, 'd_gamma': d_gamma})
        except (InvalidParameter, DegenerateIndex):
            d_pi = d_gamma = None
            d_list.append(None)
        c_lim.append({'k': k,
                      'c_pi': _c_limit(spec.structure, d_pi),
                      'c_gamma': _c_limit(spec.structure, d_gamma)})

    checks = {
        'var_bounds': all(v['pass'] for v in var_bounds),
        'lln_pi': all(_shrinks([v[key] for v in lln]) for key in ('pi_observed', 'pi_unobserved')),
        'lln_gamma': all(_shrinks([v[key] for v in lln]) for key in ('gamma_observed', 'gamma_unobserved')),
        'outliers_x': _shrinks([v['x'] for v in outliers]),
        'outliers_gamma_index': _shrinks([v['gamma_index'] for v in outliers]),
    }
    return AssumptionReport(k_grid=k_grid, var_bound=var_bound, var_bounds=var_bounds, lln_variances=lln,
                            c_pi=c_pi, c_gamma=c_gamma, c_limits=c_lim, outlier_sums=outliers, d_constants=d_list,
                            checks=checks)


def _c_limit(structure, d):
    if isinstance(structure, Factor):
        return limits.prop_c_value('Factor', 0., 0.)
    if d is None:
        return None
    try:
        return limits.prop_c_value(structure.kind, structure_parameter(structure), d)
    except InvalidParameter:
        return None
