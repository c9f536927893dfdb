import os

import numpy as np
import pytest

from trellisexp.channels import Dmc, InputDist

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def bsc01():
    return Dmc([[0.9, 0.1], [0.1, 0.9]])


@pytest.fixture(scope="session")
def uniform2():
    return InputDist([0.5, 0.5])


@pytest.fixture(scope="session")
def asym3():
    """Fixed asymmetric 3-input/3-output channel with non-uniform Q."""
    dmc = Dmc([[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.25, 0.25, 0.5]])
    q = InputDist([0.5, 0.3, 0.2])
    return dmc, q


def random_channel(rng, j=None, ny=None):
    """A random strictly positive DMC and input distribution."""
    j = j or rng.integers(2, 5)
    ny = ny or rng.integers(2, 5)
    w = rng.random((j, ny)) + 0.05
    w /= w.sum(axis=1, keepdims=True)
    q = rng.random(j) + 0.1
    q /= q.sum()
    return Dmc(w), InputDist(q)
