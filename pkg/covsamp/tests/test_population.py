"""
Unit tests of the long regression objects and the omitted variable bias
"""
import itertools

import numpy as np
import pytest

from covsamp.design import SelectionMask, sample_mask
from covsamp.errors import InvalidParameter
from covsamp.population import beta_medium, c_ratio, derive_population, ovb, ovb_formula, population_summary
from covsamp.projection import CovarianceModel
from covsamp.tests.populations import population_from, random_population


def test_derive_population_recovers_coefficients():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(5, 5))
    sigma_w = a @ a.T / 5 + np.eye(5)
    pi, gamma = rng.normal(size=5), rng.normal(size=5)
    pop = population_from(sigma_w, pi, gamma, beta_long=0.7, x_resid_var=2., y_resid_var=0.5)
    assert pop.beta_long == pytest.approx(0.7, rel=1e-9)
    assert np.allclose(pop.pi, pi, rtol=1e-9, atol=1e-12)
    assert np.allclose(pop.gamma, gamma, rtol=1e-9, atol=1e-12)
    assert not pop.degenerate


def test_population_blocks(diag_pop):
    assert diag_pop.k == 4
    assert diag_pop.var_x == pytest.approx(1.3)
    assert np.allclose(diag_pop.c_x, [.1, .2, .3, .4])
    assert diag_pop.r2_x_w == pytest.approx(.3 / 1.3)
    assert diag_pop.cov_x_gamma_index == pytest.approx(.2)


def test_ovb_hand_value(diag_pop):
    # Cov(X perp W_1, gamma_2'W_2) = .1 and Var(X perp W_1) = 1.25
    mask = SelectionMask.from_string('1100')
    assert ovb_formula(diag_pop, mask) == pytest.approx(.08)
    assert ovb(diag_pop, mask) == pytest.approx(.08)
    assert beta_medium(diag_pop, mask) == pytest.approx(1.08)


def test_ovb_matches_formula_on_every_mask():
    pop = random_population(5, 6)
    for d1 in (1, 3, 5):
        for observed in itertools.combinations(range(6), d1):
            mask = SelectionMask(k=6, observed=observed)
            assert ovb(pop, mask) == pytest.approx(ovb_formula(pop, mask), rel=1e-8, abs=1e-12)


def test_full_and_empty_masks():
    pop = random_population(6, 4)
    assert beta_medium(pop, np.ones(4, dtype=bool)) == pytest.approx(pop.beta_long, rel=1e-10)
    assert ovb(pop, np.ones(4, dtype=bool)) == 0.
    assert beta_medium(pop, np.zeros(4, dtype=bool)) == pytest.approx(pop.cov_yx / pop.var_x)


@pytest.mark.filterwarnings('ignore')
def test_no_omitted_variable_bias_without_gamma():
    pop = population_from(np.eye(3) + 0.2, [.5, .5, .5], [0., 0., 0.])
    assert pop.degenerate
    for bits in ('100', '010', '110', '011'):
        assert ovb(pop, SelectionMask.from_string(bits)) == pytest.approx(0., abs=1e-12)


def test_mask_size_mismatch(diag_pop):
    with pytest.raises(InvalidParameter):
        beta_medium(diag_pop, SelectionMask.from_string('101'))


def test_population_summary(diag_pop):
    summary = population_summary(diag_pop)
    assert summary['k'] == 4
    assert summary['labels'] == ['Y', 'X', 'W1', 'W2', 'W3', 'W4']
    # diagonal covariates: all of the index variance is per-covariate
    assert summary['c_pi'] == pytest.approx(1.)
    assert summary['c_gamma'] == pytest.approx(1.)
    assert c_ratio(np.zeros(4), np.eye(4)) is None


def _rescaled(pop, x_scale=1., y_scale=1.):
    scale = np.diag([y_scale, x_scale] + [1.] * pop.k)
    return derive_population(CovarianceModel.from_matrix(scale @ pop.cov.sigma @ scale))


@pytest.mark.parametrize('seed', range(10))
def test_rescaling_the_treatment(seed):
    pop = random_population(seed, 6)
    mask = sample_mask(6, 3, np.random.default_rng(seed))
    scaled = _rescaled(pop, x_scale=2.5)
    assert scaled.pi == pytest.approx(2.5 * pop.pi, rel=1e-9, abs=1e-12)
    assert scaled.gamma == pytest.approx(pop.gamma, rel=1e-9, abs=1e-12)
    assert scaled.beta_long == pytest.approx(pop.beta_long / 2.5, rel=1e-9, abs=1e-12)
    assert ovb(scaled, mask) == pytest.approx(ovb(pop, mask) / 2.5, rel=1e-8, abs=1e-12)


@pytest.mark.parametrize('seed', range(10))
def test_rescaling_the_outcome(seed):
    pop = random_population(seed, 6)
    mask = sample_mask(6, 3, np.random.default_rng(seed))
    scaled = _rescaled(pop, y_scale=-3.)
    assert scaled.pi == pytest.approx(pop.pi, rel=1e-9, abs=1e-12)
    assert scaled.gamma == pytest.approx(-3. * pop.gamma, rel=1e-9, abs=1e-12)
    assert scaled.beta_long == pytest.approx(-3. * pop.beta_long, rel=1e-9, abs=1e-12)
    assert ovb(scaled, mask) == pytest.approx(-3. * ovb(pop, mask), rel=1e-8, abs=1e-12)
