"""
Shared fixtures: small hand-checkable populations and a demo dataset.
"""

import numpy as np
import pytest

from covsamp.tests.populations import population_from


@pytest.fixture
def diag_pop():
    """
    Var(W) = I, pi = (.1, .2, .3, .4), gamma = (.4, .3, .2, .1).
    """
    return population_from(np.eye(4), [.1, .2, .3, .4], [.4, .3, .2, .1])


@pytest.fixture
def correlated_pair_pop():
    """
    Two covariates with correlation 1/2, gamma = (1, 1), pi = (1, 0).
    """
    return population_from([[1., .5], [.5, 1.]], [1., 0.], [1., 1.])


@pytest.fixture
def demo_csv(tmp_path):
    path = tmp_path / 'data.csv'
    path.write_text('y,x,w1,w2,g\n'
                    '1.0,0.5,2.0,1.0,a\n'
                    '2.0,1.5,1.0,3.0,a\n'
                    '1.5,0.0,0.5,2.5,a\n'
                    '3.0,2.5,3.0,0.5,b\n'
                    '2.5,1.0,2.5,1.5,b\n'
                    '4.0,3.5,1.5,2.0,b\n'
                    '0.5,0.5,0.0,3.5,b\n')
    return str(path)
