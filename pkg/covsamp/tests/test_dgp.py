"""
Unit tests of the synthetic data generating processes and the assumption validator
"""
import numpy as np
import pytest

from covsamp import config, dgp, limits
from covsamp.design import SelectionMask
from covsamp.errors import DegenerateIndex, InvalidParameter
from covsamp.params import ParamId, evaluate, k_x


def test_build_cov_structures():
    assert np.allclose(dgp.build_cov(dgp.MA1(.3), 4), [[1, .3, 0, 0], [.3, 1, .3, 0], [0, .3, 1, .3], [0, 0, .3, 1]])
    assert np.allclose(dgp.build_cov(dgp.AR1(.5), 3), [[1, .5, .25], [.5, 1, .5], [.25, .5, 1]])
    exch = dgp.build_cov(dgp.Exchangeable(.4), 5)
    assert np.allclose(np.diag(exch), 1.)
    assert np.allclose(exch[~np.eye(5, dtype=bool)], .4)
    shrink = dgp.build_cov(dgp.ExchangeableShrink(2.), 10)
    assert np.allclose(shrink[0, 1], .2)
    assert np.allclose(np.diag(shrink), 1.)
    factor = dgp.build_cov(dgp.Factor(loadings=(.5, .5), sigma_e2=.5), 3)
    assert np.allclose(factor, .5 * np.eye(3) + .5)


def test_factor_loading_matrix():
    lam = ((1., 0.), (0., 1.), (1., 1.))
    cov = dgp.build_cov(dgp.Factor(loadings=lam, sigma_e2=1.), 3)
    assert np.allclose(cov, np.array(lam) @ np.array(lam).T + np.eye(3))
    with pytest.raises(InvalidParameter):
        dgp.build_cov(dgp.Factor(loadings=lam, sigma_e2=1.), 4)


@pytest.mark.parametrize('structure', [dgp.MA1(.5), dgp.AR1(-1.), dgp.Exchangeable(0.), dgp.ExchangeableShrink(10.),
                                       dgp.ExchangeableShrink(-1.), dgp.Factor(loadings=(1.,), sigma_e2=0.)])
def test_structure_ranges(structure):
    with pytest.raises(InvalidParameter):
        dgp.build_cov(structure, 10)


def test_flat_and_alternating_rules():
    assert np.allclose(dgp.build_coefficients(dgp.Flat(c=2.), 4, structure=dgp.MA1(.2)), 1.)
    assert np.allclose(dgp.build_coefficients(dgp.Flat(c=2.), 4, structure=dgp.Exchangeable(.2)), .5)
    assert np.allclose(dgp.build_coefficients(dgp.Flat(c=2., rate='linear'), 4), .5)
    alt = dgp.build_coefficients(dgp.Alternating(c=1., rate='sqrt'), 4)
    assert np.allclose(alt, [.5, -.5, .5, -.5])
    with pytest.raises(InvalidParameter):
        dgp.build_coefficients(dgp.Flat(rate='cubic'), 4)
    with pytest.raises(InvalidParameter):
        dgp.build_coefficients(dgp.Flat(), 1)


def test_corollary_rule_sequences():
    k = 10
    gamma = dgp.build_coefficients(dgp.Corollary1(target_c=3., r=1.), k, 'gamma')
    pi = dgp.build_coefficients(dgp.Corollary1(target_c=3., r=1.), k, 'pi')
    assert np.allclose(gamma[0::2], 0.)
    assert np.allclose(gamma[1::2], .2)
    assert np.allclose(pi[0::2], -.6)
    assert np.allclose(pi[1::2], .8)


def test_explicit_rule_pads_with_zeros():
    assert np.allclose(dgp.build_coefficients(dgp.Explicit((1., 2.)), 4), [1, 2, 0, 0])
    with pytest.raises(InvalidParameter):
        dgp.build_coefficients(dgp.Explicit((1., 2., 3.)), 2)


def test_spec_from_default_conf():
    conf = config.conf_dict(config.CONF)
    spec = dgp.DgpSpec.from_conf(conf['dgp'])
    assert spec.structure == dgp.MA1(rho=.3)
    assert spec.pi_rule == dgp.Flat(c=1., rate=None)
    doc = spec.to_dict()
    assert doc['structure']['kind'] == 'MA1'
    assert doc['gamma_rule']['kind'] == 'Flat'

    conf['dgp'].update(pi_rule='Explicit', pi_vector=None)
    with pytest.raises(InvalidParameter):
        dgp.DgpSpec.from_conf(conf['dgp'])


def test_factor_loading_matrix_from_conf():
    user = {'dgp': {'structure': 'Factor', 'k': 3, 'loadings': [[1, 0], [0, 1.], [1, 1]], 'sigma_e2': 1.}}
    conf = config.conf_dict(config.update_conf(config.CONF, user))
    spec = dgp.DgpSpec.from_conf(conf['dgp'])
    assert spec.structure.loadings == ((1., 0.), (0., 1.), (1., 1.))
    lam = np.array(spec.structure.loadings)
    assert np.allclose(dgp.build_cov(spec.structure, 3), lam @ lam.T + np.eye(3))

    conf['dgp']['loadings'] = [.6, .3]
    assert dgp.DgpSpec.from_conf(conf['dgp']).structure.loadings == (.6, .3)


@pytest.mark.parametrize('loadings', [[[1., 0.], [0., 1.]], [[1., 0.], [0.], [1., 1.]], [[1.], .5, [1.]],
                                      [[], [], []], [], [['a'], [1.], [1.]]])
def test_bad_factor_loadings_from_conf(loadings):
    conf = config.conf_dict(config.CONF)
    conf['dgp'].update(structure='Factor', k=3, loadings=loadings)
    with pytest.raises(InvalidParameter):
        dgp.DgpSpec.from_conf(conf['dgp'])


def test_assembled_population_recovers_coefficients():
    spec = dgp.DgpSpec(structure=dgp.AR1(.4), pi_rule=dgp.Alternating(c=1.), gamma_rule=dgp.Alternating(c=.5),
                       beta_long=2.)
    pop = dgp.assemble_population(spec, 8)
    assert pop.beta_long == pytest.approx(2., rel=1e-10)
    assert np.allclose(pop.pi, dgp.build_coefficients(spec.pi_rule, 8, structure=spec.structure), atol=1e-12)
    assert np.allclose(pop.gamma, pop.pi / 2, atol=1e-12)


def test_small_index_covariance_warns():
    with pytest.warns(UserWarning):
        dgp.covariance_from_coefficients(np.eye(4), [1., -1., 1., -1.], [.25, .25, .25, .25])
    with pytest.raises(InvalidParameter):
        dgp.covariance_from_coefficients(np.eye(2), [1., 0.], [1., 0.], x_resid_var=0.)


@pytest.mark.parametrize('structure', [dgp.MA1(.3), dgp.MA1(-.2), dgp.AR1(.6)])
def test_c_constant_is_function_of_d_constant(structure):
    spec = dgp.DgpSpec(structure=structure, gamma_rule=dgp.Alternating())
    c_pi, c_gamma = dgp.c_constants(spec, 50)
    d_pi, d_gamma = dgp.d_constants(spec, 50)
    param = dgp.structure_parameter(structure)
    assert c_pi == pytest.approx(limits.prop_c_value(structure.kind, param, d_pi), rel=1e-10)
    assert c_gamma == pytest.approx(limits.prop_c_value(structure.kind, param, d_gamma), rel=1e-10)


def test_c_constants_of_dependent_structures():
    c_pi, _ = dgp.c_constants(dgp.DgpSpec(structure=dgp.MA1(.3)), 1000)
    assert c_pi == pytest.approx(1 / 1.5994, rel=1e-6)
    c_pi, _ = dgp.c_constants(dgp.DgpSpec(structure=dgp.Exchangeable(.5)), 1000)
    assert c_pi == pytest.approx(1 / 500.5, rel=1e-6)
    with pytest.raises(InvalidParameter):
        dgp.d_constants(dgp.DgpSpec(structure=dgp.Factor(loadings=(.7,), sigma_e2=.51)), 10)
    with pytest.raises(DegenerateIndex):
        dgp.d_constants(dgp.DgpSpec(structure=dgp.ExchangeableShrink(1.), pi_rule=dgp.Alternating()), 10)


def test_exchangeable_flat_population_has_unit_acet_delta():
    spec = dgp.DgpSpec(structure=dgp.Exchangeable(.3))
    pop = dgp.assemble_population(spec, 12)
    for observed in ((0,), (0, 3, 7), tuple(range(8))):
        ev = evaluate(pop, SelectionMask(k=12, observed=observed), [ParamId.DELTA_ACET])[0]
        assert ev.value == pytest.approx(1., rel=1e-9)


def test_shrinking_exchangeable_k_x_approaches_its_limit():
    spec = dgp.DgpSpec(structure=dgp.ExchangeableShrink(2.))
    pop = dgp.assemble_population(spec, 40)
    mask = SelectionMask(k=40, observed=tuple(range(0, 40, 2)))
    assert k_x(pop, mask).value == pytest.approx(19 / 59, rel=1e-9)
    assert limits.limit_k_x(1., 2., 1.) == pytest.approx(1 / 3)


def test_validator_passes_well_behaved_process():
    report = dgp.validate_assumptions(dgp.DgpSpec(structure=dgp.MA1(.3)), [100, 400, 1600])
    assert report.passed
    assert report.checks == {'var_bounds': True, 'lln_pi': True, 'lln_gamma': True, 'outliers_x': True,
                             'outliers_gamma_index': True}
    assert [row['k'] for row in report.lln_variances] == [100, 400, 1600]
    assert report.c_limits[-1]['c_pi'] == pytest.approx(1 / (1 + .6 * 1599 / 1600))
    assert report.to_dict()['passed'] is True


def test_validator_flags_a_dominant_covariate():
    spec = dgp.DgpSpec(structure=dgp.MA1(.3), pi_rule=dgp.Explicit((.9,)), gamma_rule=dgp.Explicit((.9,)))
    report = dgp.validate_assumptions(spec, [10, 40, 160])
    assert not report.checks['lln_pi']
    assert not report.checks['outliers_x']
    assert not report.passed


def test_validator_needs_increasing_grid():
    spec = dgp.DgpSpec(structure=dgp.MA1(.3))
    with pytest.raises(InvalidParameter):
        dgp.validate_assumptions(spec, [100, 50])
    with pytest.raises(InvalidParameter):
        dgp.validate_assumptions(spec, [10, 20], var_bound=1.)
