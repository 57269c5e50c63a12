import numpy as np
import pytest

from kdpiso.crystals import default_database
from kdpiso.spectral import SpectralGrid


@pytest.fixture(scope="session")
def db():
    return default_database()


@pytest.fixture(scope="session")
def kdp(db):
    return db.get("KDP")


def separable_grid(n_s=32, n_i=40, width_s=0.002, width_i=0.003):
    """Gaussian product grid centered at (0.83, 0.85) um, normalized."""
    sig = np.linspace(0.82, 0.84, n_s)
    idl = np.linspace(0.835, 0.865, n_i)
    gs = np.exp(-0.5 * ((sig - 0.83) / width_s) ** 2)
    gi = np.exp(-0.5 * ((idl - 0.85) / width_i) ** 2)
    amp = np.outer(gs, gi).astype(complex)
    return SpectralGrid(sig, idl, amp).normalize()


def random_grid(rng, n_s=8, n_i=8):
    """Random complex normalized grid on small axes."""
    sig = np.linspace(0.80, 0.86, n_s)
    idl = np.linspace(0.82, 0.90, n_i)
    amp = rng.standard_normal((n_s, n_i)) + 1j * rng.standard_normal((n_s, n_i))
    return SpectralGrid(sig, idl, amp).normalize()
