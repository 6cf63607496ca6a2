import numpy as np
import pytest

from vortexao import GridSpec


@pytest.fixture
def grid64():
    return GridSpec(64, 0.01 / 64, 633e-9)


@pytest.fixture
def grid32():
    return GridSpec(32, 0.01 / 32, 633e-9)


@pytest.fixture
def grid16():
    return GridSpec(16, 0.01 / 16, 633e-9)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
