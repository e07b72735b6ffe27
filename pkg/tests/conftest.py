import numpy as np
import pytest

from scldpc import EnsembleSpec, build_base, couple


@pytest.fixture(scope="session")
def cp363():
    return couple(build_base(3, 6), 3)


@pytest.fixture(scope="session")
def cp36_50():
    return couple(build_base(3, 6), 50)


@pytest.fixture(scope="session")
def spec_p50():
    return EnsembleSpec("protograph", 3, 6, 50)


@pytest.fixture(scope="session")
def spec_p100():
    return EnsembleSpec("protograph", 3, 6, 100)


@pytest.fixture(scope="session")
def spec_r100():
    return EnsembleSpec("random", 3, 6, 100)


def rng_of(seed):
    return np.random.default_rng(seed)
