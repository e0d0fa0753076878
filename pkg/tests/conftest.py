import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "eigenwork",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("eigenwork")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
