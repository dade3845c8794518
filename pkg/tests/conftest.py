import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, derandomize=True, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def five_point_cloud():
    """Five points whose Rips complex at r = 4 has 6 edges and 1 triangle."""
    a = 11.51 / 8
    k = np.sqrt(12.5 - (2 - a) ** 2)
    h = np.sqrt(5 - a * a)
    return np.array([[-2, -k], [-a, 0], [0, h], [a, 0], [2, -k]])


@pytest.fixture
def five_points():
    return five_point_cloud()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
