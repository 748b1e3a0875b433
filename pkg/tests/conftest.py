import numpy as np
import pytest


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)


def assert_within_se(value, target, se, k=3.0, floor=1e-12):
    """Assert |value - target| <= k * se (with a tiny floor for exact cases)."""
    assert abs(value - target) <= k * max(se, floor), (
        f"value {value} not within {k} se ({se}) of {target}")
