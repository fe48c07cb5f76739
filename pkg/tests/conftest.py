import numpy as np
import pytest

from ifdetect.detectability import IFParams
from ifdetect.simkit import EXAMPLE_COV, EXAMPLE_DIRECTION, EXAMPLE_MEAN
from ifdetect.stat_core import GaussianModel

ALPHA = 0.01


@pytest.fixture(scope="session")
def example_model():
    # population moments of the two-variable process, N = 5000
    return GaussianModel.from_moments(EXAMPLE_MEAN, EXAMPLE_COV, 5000)


@pytest.fixture(scope="session")
def example_params():
    return IFParams(EXAMPLE_DIRECTION, 4.0, 10, 10, 10, is_lower_bound=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
