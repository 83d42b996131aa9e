import pytest

from creditpool import (
    FirmType,
    SystematicFactorConfig,
    TimeGrid,
    homogeneous_measure,
)

# The recurring base case: a homogeneous pool with strong mean reversion
# and a sizable contagion sensitivity.
BASE = FirmType(alpha=4.0, lambda_bar=0.5, sigma=0.9, beta_c=2.0, beta_s=0.0)
BASE_LAMBDA_INIT = 0.5


@pytest.fixture
def base_type():
    return BASE


@pytest.fixture
def base_measure():
    return homogeneous_measure(BASE, BASE_LAMBDA_INIT)


@pytest.fixture
def grid_1k():
    return TimeGrid(t_end=1.0, n_steps=1000)


@pytest.fixture
def grid_coarse():
    return TimeGrid(t_end=1.0, n_steps=200)


@pytest.fixture
def factor():
    return SystematicFactorConfig()
