import numpy as np
import pytest

from utils.tomography.povm import aligned_tetrahedron, default_instrument
from utils.tomography.qstate import named_state

ONE_QUBIT_STATES = ("unpolarized", "horizontal", "b1r", "minus_b1r")
NAMED_STATES = ONE_QUBIT_STATES + ("bell_psi_plus",)


@pytest.fixture(scope="session")
def tetra():
    return aligned_tetrahedron()


@pytest.fixture(scope="session")
def B1():
    return default_instrument(1, "aligned")


@pytest.fixture(scope="session")
def B2():
    return default_instrument(2, "aligned")


@pytest.fixture(scope="session")
def states():
    return {label: named_state(label) for label in NAMED_STATES}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_hermitian(rng, dimension, count=None):
    shape = (dimension, dimension) if count is None else (count, dimension, dimension)
    x = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))
