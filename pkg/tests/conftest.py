import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def separated(draw_configs, min_gap=1e-3):
    """True when no two positions of a configuration nearly coincide."""
    x = np.sort(np.asarray(draw_configs, dtype=float))
    return x.size < 2 or np.min(np.diff(x)) > min_gap
