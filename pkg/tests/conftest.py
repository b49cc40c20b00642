import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pdestruct import Function2D, Rect

settings.register_profile(
    "pdestruct",
    deadline=None,
    max_examples=60,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("pdestruct")


def field(fn, domain=Rect(-2, 2, -2, 2), name="f", partials=None):
    """Small helper: wrap a numpy expression as a Function2D."""
    return Function2D(lambda x, y: fn(x, y) + 0.0 * x, domain, name, partials or {})


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
