import numpy as np
import pytest

from hyperbubble.ground_state import ground_state


@pytest.fixture(scope="session")
def base():
    """Profile for (n, p, lambda) = (3, 3, 0.5)."""
    return ground_state(3, 3.0, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
