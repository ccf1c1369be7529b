import numpy as np
import pytest

from kpilab import DispersionParams, TorusGrid, default_profile, make_control_profile
from kpilab.experiments import random_field, seeded_rng


@pytest.fixture(scope="session")
def grid_1d():
    return TorusGrid(64)


@pytest.fixture(scope="session")
def grid_2d():
    return TorusGrid(64, 16)


@pytest.fixture(scope="session")
def kp_params():
    return DispersionParams.kp1(2.0)


@pytest.fixture(scope="session")
def profile_64():
    return make_control_profile(np.pi / 4, 3 * np.pi / 4, "smooth-exp", TorusGrid(64))


@pytest.fixture(scope="session")
def profile_default():
    return default_profile(1024)


@pytest.fixture()
def rng():
    return seeded_rng(1234, "unit-tests")


def make_random_field(grid, rng, **kw):
    return random_field(grid, rng, **kw)
