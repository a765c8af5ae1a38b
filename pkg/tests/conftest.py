import numpy as np
import pytest

from sdelab import BrownianPath, StreamId, TimeGrid


@pytest.fixture
def unit_grid():
    return TimeGrid(1.0, 1e-3)


def make_zero_path(grid: TimeGrid) -> BrownianPath:
    """A frozen driving path W == 0; turns SDE machinery deterministic."""
    return BrownianPath(grid, np.zeros(grid.n + 1), StreamId(0, 0, 0))


@pytest.fixture
def zero_path(unit_grid):
    return make_zero_path(unit_grid)
