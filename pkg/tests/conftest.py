import numpy as np
import pytest

from matchillum import datasets
from matchillum.illuminator import synthetic_illuminator


@pytest.fixture(scope="session")
def cmf():
    return datasets.cie1931().matrix


@pytest.fixture(scope="session")
def camera():
    return datasets.nikon_d5100().matrix


@pytest.fixture(scope="session")
def macbeth():
    return datasets.macbeth()


@pytest.fixture(scope="session")
def model():
    return synthetic_illuminator()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
