import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from turbocs.model import SystemConfig  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20161015)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def desk_cfg():
    """Desk-scale analogue of the M/N = 0.7 experiment."""
    return SystemConfig(n=4096, m=2867, lam=0.4, snr_db=50.0, base_seed=0)
