import numpy as np
import pytest

import perron as pr


@pytest.fixture
def counting2():
    return pr.make_counting_space(2)


@pytest.fixture
def symmetric_2x2(counting2):
    """Hand oracle: eigenvalues {3, 1}, Perron vector (1, 1)."""
    return pr.Kernel(np.array([[2.0, 1.0], [1.0, 2.0]]), counting2)


@pytest.fixture
def two_state_chain(counting2):
    """Row-stochastic chain with a zero entry; eigenvalues {1, -1/2}
    (characteristic polynomial x^2 - x/2 - 1/2, solved by hand)."""
    return pr.Kernel(np.array([[0.0, 1.0], [0.5, 0.5]]), counting2)


@pytest.fixture
def unit_interval_64():
    return pr.make_interval_space(0.0, 1.0, 64, "midpoint")


@pytest.fixture
def constant_unit(unit_interval_64):
    return pr.constant_kernel(unit_interval_64, 1.0)


def random_positive_kernel(space, rng, low=0.05, high=1.05):
    return pr.Kernel(rng.uniform(low, high, (space.size, space.size)), space)
