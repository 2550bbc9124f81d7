import numpy as np
import pytest


@pytest.fixture(scope="session")
def unit_normal_pool():
    """Ten million standard normal draws shared by the Monte Carlo oracles."""
    rng = np.random.default_rng(20240117)
    return rng.normal(size=10_000_000)
