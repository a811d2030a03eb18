import numpy as np
import pytest

from mpp.core import MppInstance
from mpp.io import example1


@pytest.fixture(scope="session")
def ex1():
    return example1()


@pytest.fixture
def two_state_aligned():
    """Receiver and sender both prefer action 0 in state 0 and action 1 in state 1."""
    u = np.array([[1.0, 0.0], [0.0, 1.0]])
    kernel = np.array([[[0.7, 0.3], [0.4, 0.6]], [[0.5, 0.5], [0.1, 0.9]]])
    return MppInstance(kernel=kernel, receiver_utility=u, sender_reward=u.copy(), name="aligned")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running reproduction checks")
