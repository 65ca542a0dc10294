import numpy as np
import pytest

from bergmanlab import Domain, GridSpec, make_grid


@pytest.fixture(scope="session")
def disk():
    return Domain.disk()


@pytest.fixture(scope="session")
def radial_points(disk):
    return make_grid(disk, GridSpec("radial", 10, 0.05))


@pytest.fixture(scope="session")
def cartesian_points(disk):
    return make_grid(disk, GridSpec("cartesian", 15, 0.05))


@pytest.fixture
def rng():
    return np.random.default_rng(7)
