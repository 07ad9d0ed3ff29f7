"""
Shared fixtures: the reference problems and addressed random generators.
"""
import numpy as np
import pytest

from navier_cascade.samplers import RngStream, stream_seed
from navier_cascade.verify import reference_spec


@pytest.fixture(scope="session")
def small_spec():
    """Small-data problem with nonzero forcing, fitted to the contraction hypotheses"""
    return reference_spec("small_data")


@pytest.fixture(scope="session")
def zero_spec():
    return reference_spec("zero_data")


@pytest.fixture
def rng():
    return RngStream(stream_seed(20240611, 1)).generator()


@pytest.fixture
def make_rng():
    def factory(*keys: int) -> np.random.Generator:
        return RngStream(stream_seed(20240611, *keys)).generator()

    return factory
