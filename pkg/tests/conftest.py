import numpy as np
import pytest

from utils.config import use_settings


@pytest.fixture(autouse=True)
def default_settings():
    """Every test starts and ends on the environment defaults"""
    use_settings(None)
    yield
    use_settings(None)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
