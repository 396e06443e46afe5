import numpy as np
import pytest

from framelab import models as M


@pytest.fixture(scope="session")
def torus2():
    return M.flat_torus(2, 1.0)


@pytest.fixture(scope="session")
def sphere2():
    return M.round_sphere(2)


@pytest.fixture(scope="session")
def sphere3():
    return M.round_sphere(3)


@pytest.fixture(scope="session")
def genus2():
    return M.genus2_hyperbolic()


@pytest.fixture(scope="session")
def kaehler():
    return M.kaehler_torus()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
