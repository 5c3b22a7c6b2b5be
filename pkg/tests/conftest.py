import numpy as np
import pytest

from sequence_models import Spectrum, WeightSequence


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def linear():
    return Spectrum.linear()


@pytest.fixture
def power_one():
    return WeightSequence.power(1.0)


@pytest.fixture
def zero_weights():
    return WeightSequence.zero()
