import numpy as np
import pytest

from bsqlab.spectral import make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20190917)


@pytest.fixture(scope="session")
def pi_grid():
    # integer mode frequencies: xi_j = j
    return make_grid(64, np.pi)


@pytest.fixture(scope="session")
def band_grid():
    # resolves the high-frequency band |xi| >= 40 of the B correction
    # (and sqrt(0.1)|xi| >= 40) within the dealiased band
    return make_grid(256, np.pi / 2.0)
