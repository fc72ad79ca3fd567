import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_positions(rng, spread=0.6):
    """20 random joints around a random camera-frame spine with a usable hip line."""
    spine = rng.uniform([-1, -0.5, 1.5], [1, 0.5, 3.5])
    P = spine + rng.normal(0.0, spread, (20, 3))
    P[10] = spine
    P[13] = spine + np.array([0.15, -0.3, 0.0]) + rng.normal(0, 0.05, 3)   # right hip
    P[12] = spine + np.array([-0.15, -0.3, 0.0]) + rng.normal(0, 0.05, 3)  # left hip
    return P


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
