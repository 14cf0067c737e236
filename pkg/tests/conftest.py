import numpy as np
import pytest

from wqfinsler.acceptance import conformal_config
from wqfinsler.metric import minkowski_config


@pytest.fixture
def square_mink():
    return minkowski_config("square", c=(0.3, 0.0))


@pytest.fixture
def curved():
    return conformal_config("square_shift2")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
