"""
Unit tests of the closed-form limits and the limit curve classification
"""
import math

import numpy as np
import pytest

from covsamp import dgp, limits
from covsamp.errors import DegenerateIndex, InsufficientGrid, InvalidParameter


R_GRID = [.25, .5, 1., 2., 4.]


def test_limits_at_equal_selection():
    for c in (0., .3, 1., 2.5):
        assert limits.limit_r_x(1., c) == pytest.approx(1.)
        assert limits.limit_r_y(1., c) == pytest.approx(1.)
        assert limits.limit_delta_orig(1., c) == pytest.approx(1.)
    assert limits.limit_delta_acet() == 1.


def test_limit_values():
    assert limits.limit_r_x(4., 0.) == pytest.approx(4.)
    assert limits.limit_r_x(4., 1.) == pytest.approx(2.)
    assert limits.limit_delta_orig(2., 0.) == pytest.approx(.5)
    assert limits.limit_delta_orig(3., 1.) == pytest.approx(1.)
    assert limits.limit_k_x(2., 0., 1.) == pytest.approx(2.)
    assert limits.limit_k_x(1., 2., 1.) == pytest.approx(1 / 3)


def test_limit_arguments_are_checked():
    with pytest.raises(InvalidParameter):
        limits.limit_r_x(0., .5)
    with pytest.raises(InvalidParameter):
        limits.limit_delta_orig(1., -.1)
    with pytest.raises(InvalidParameter):
        limits.limit_k_x(1., -1., 1.)
    with pytest.raises(InvalidParameter):
        limits.limit_k_x(1., 1., .5)


def test_prop_c_values():
    assert limits.prop_c_value('MA1', .3, 1.) == pytest.approx(1 / 1.6)
    assert limits.prop_c_value('AR1', .9, 3.) == pytest.approx(.25)
    assert limits.prop_c_value('Factor', 0., 5.) == 0.
    assert limits.prop_c_value('Exchangeable', .5, 1.) == 0.
    assert limits.prop_c_value('ExchangeableShrink', 0., 2.) == pytest.approx(1.)
    assert limits.prop_c_value('ExchangeableShrink', 2., 2.) == pytest.approx(.5)
    with pytest.raises(InvalidParameter):
        limits.prop_c_value('MA2', .3, 1.)
    with pytest.raises(InvalidParameter):
        limits.prop_c_value('MA1', .3, -2.)


@pytest.mark.parametrize('k', [4, 10, 100])
@pytest.mark.parametrize('target_c,r', [(3., 1.), (2., .5), (.5, 3.)])
def test_corollary_sequences_hit_their_target(k, target_c, r):
    rule = dgp.Corollary1(target_c=target_c, r=r)
    pi = dgp.build_coefficients(rule, k, 'pi')
    gamma = dgp.build_coefficients(rule, k, 'gamma')
    assert limits.delta_resid_finite_k(pi, gamma, r) == pytest.approx(target_c, rel=1e-10)


def test_delta_resid_expression_degenerate():
    with pytest.raises(DegenerateIndex):
        limits.delta_resid_finite_k([1., -1.], [1., 1.], 1.)
    with pytest.raises(InvalidParameter):
        limits.delta_resid_finite_k([1., 1.], [1., 1., 1.], 1.)


def test_property_check():
    assert limits.property_check(lambda r: limits.limit_r_x(r, 0.), R_GRID) == \
        {'consistent': True, 'monotone_in_selection': True}
    assert limits.property_check(lambda r: limits.limit_r_x(r, 1.), R_GRID) == \
        {'consistent': True, 'monotone_in_selection': True}
    # 1 / r moves the wrong way
    assert limits.property_check(lambda r: limits.limit_delta_orig(r, 0.), R_GRID) == \
        {'consistent': True, 'monotone_in_selection': False}
    # flat in r
    assert limits.property_check(lambda r: limits.limit_delta_orig(r, 1.), R_GRID) == \
        {'consistent': True, 'monotone_in_selection': False}
    assert limits.property_check(lambda r: 2 * math.sqrt(r), R_GRID)['consistent'] is False


def test_property_check_needs_both_sides():
    with pytest.raises(InsufficientGrid):
        limits.property_check(lambda r: r, [1., 2., 3.])
    with pytest.raises(InsufficientGrid):
        limits.property_check(lambda r: r, np.linspace(.1, .9, 5))


def test_prediction_document():
    prediction = limits.LimitPrediction(param='RX', r=2., inputs={'c_pi': .5}, value=1.5)
    assert prediction.to_dict() == {'param': 'RX', 'r': 2., 'inputs': {'c_pi': .5}, 'value': 1.5}
