import numpy as np
import pytest

from micropolar.spectral import Grid3


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid16():
    return Grid3(16)


@pytest.fixture(scope="session")
def grid32():
    return Grid3(32)
