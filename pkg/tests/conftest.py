import numpy as np
import pytest

from heatbem import KernelParams, TimeGrid, generate_cube_surface


@pytest.fixture(scope="session")
def cube1():
    return generate_cube_surface(1)


@pytest.fixture(scope="session")
def cube2():
    return generate_cube_surface(2)


@pytest.fixture(scope="session")
def tg4():
    return TimeGrid(1.0, 4)


@pytest.fixture
def params_unit(tg4):
    return KernelParams(1.0, tg4.step)


@pytest.fixture(autouse=True)
def _seed():
    np.random.seed(0)
