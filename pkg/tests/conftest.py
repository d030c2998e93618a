import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


def random_tensor(rng, k, c, alpha=1.0):
    """K x C prediction tensor with Dirichlet rows."""
    return rng.dirichlet(np.full(c, alpha), size=k)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
