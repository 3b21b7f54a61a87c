import numpy as np
import pytest

from bilocal.quantum import CHSH_SETTINGS, OPTIMAL_SETTINGS, quantum_point
from bilocal.scenario import DEFAULT_SCENARIO, white_noise


def closed_form_quantum_point() -> np.ndarray:
    """Quantum point with the optimal settings, entry by entry."""
    p = np.zeros(DEFAULT_SCENARIO.shape)
    for x in range(2):
        for z in range(2):
            for a in range(2):
                for b in range(4):
                    b0, b1 = b >> 1, b & 1
                    for c in range(2):
                        if (x ^ z) == b1:
                            cond = 0.5 if (a ^ c) == b0 else 0.0
                        else:
                            cond = 0.25
                        p[x, z, a, b, c] = 0.25 * cond
    return p


@pytest.fixture(scope="session")
def pq():
    return quantum_point(OPTIMAL_SETTINGS)


@pytest.fixture(scope="session")
def pq_chsh():
    return quantum_point(CHSH_SETTINGS)


@pytest.fixture(scope="session")
def pr():
    return white_noise()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
