import numpy as np
import pytest

from torsionlab import fixtures


@pytest.fixture(scope="session")
def rank11():
    return fixtures.rank11()


@pytest.fixture(scope="session")
def rank22():
    return fixtures.rank22()


@pytest.fixture(scope="session")
def const22():
    return fixtures.const22()


@pytest.fixture(scope="session")
def gauge22():
    return fixtures.gauge22()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
