import numpy as np
import pytest

from psfft.core import OfdmConfig


@pytest.fixture
def small_cfg():
    """K=64 keeps blocks at 1024 samples."""
    return OfdmConfig(carriers=64, blocks_per_frame=4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
