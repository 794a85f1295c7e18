import pytest

from canetoads.grid import GridSpec


@pytest.fixture
def small_grid():
    return GridSpec(-10.0, 10.0, 1.0, 11.0, 81, 41, 0.05)
