import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bellcat import protocol as pr

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SQRT3 = math.sqrt(3)


@pytest.fixture(scope="session")
def bell_cat():
    """Noiseless Bell-cat at beta = sqrt(3) on 40 Fock levels."""
    return pr.prepare_bell_cat(SQRT3, 40)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, n_cav, support=None):
    support = support or n_cav
    v = np.zeros(2 * n_cav, dtype=complex)
    idx = np.r_[0:support, n_cav:n_cav + support]
    v[idx] = rng.normal(size=idx.size) + 1j * rng.normal(size=idx.size)
    return v / np.linalg.norm(v)
