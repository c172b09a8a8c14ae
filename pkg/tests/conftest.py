import numpy as np
import pytest

from parasol import Basis, default_spec


@pytest.fixture(scope="session")
def basis64():
    return Basis(64)


@pytest.fixture(scope="session")
def basis32():
    return Basis(32)


@pytest.fixture(scope="session")
def basis16():
    return Basis(16)


@pytest.fixture(scope="session")
def spec():
    return default_spec()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
