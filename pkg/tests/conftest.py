import numpy as np
import pytest

from meyerflow.meyer import GridConfig, WaveletTransform, build_filter_bank


@pytest.fixture(scope="session")
def bank():
    return build_filter_bank(256, "poly")


@pytest.fixture(scope="session")
def small_grid():
    # 3 levels, 64^2 grid: fast unit-test scale
    return GridConfig(dim=2, side=8.0, grid_points=64, j_min=-1, j_max=1)


@pytest.fixture(scope="session")
def medium_grid():
    # acceptance-scale 2-D configuration
    return GridConfig(dim=2, side=16.0, grid_points=256, j_min=-2, j_max=2)


@pytest.fixture(scope="session")
def small_tr(bank, small_grid):
    return WaveletTransform(bank, small_grid)


@pytest.fixture(scope="session")
def medium_tr(bank, medium_grid):
    return WaveletTransform(bank, medium_grid)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
