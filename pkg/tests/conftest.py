import math

import numpy as np
import pytest

from wgnls import DomainSpec, ModelParams

DESK = dict(d=1, m=1, alpha=4.0, L=16.0, n_x=512, n_y=64)

#: squared L^2 norm of the 1d quintic soliton 3^{1/4} sech^{1/2}(2x)
MASS_Q1 = math.sqrt(3.0) * math.pi / 2.0


@pytest.fixture(scope="session")
def params():
    return ModelParams(1, 1, 4.0)


@pytest.fixture(scope="session")
def domain():
    return DomainSpec(16.0, 512, 64)


@pytest.fixture(scope="session")
def params_1d():
    return ModelParams(1, 0, 4.0)


@pytest.fixture(scope="session")
def domain_1d():
    return DomainSpec(16.0, 512, 0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
