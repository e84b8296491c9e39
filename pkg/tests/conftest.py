import numpy as np
import pytest

from adiabound import TspInstance


@pytest.fixture
def cyclic4():
    # 4 cities on a line, d[i][j] = |i - j|; best closed tour is the line walk
    d = np.abs(np.subtract.outer(np.arange(4.0), np.arange(4.0)))
    return TspInstance.from_distances(d, name="cyclic4")


@pytest.fixture
def rng():
    return np.random.default_rng(20260825)
