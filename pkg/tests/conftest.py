import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_density(rng, dim=4, rank=None):
    """Random density matrix from a Ginibre ensemble."""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def assert_valid_state(rho, atol_herm=1e-12, atol_tr=1e-12, atol_psd=1e-10):
    assert np.allclose(rho, rho.conj().T, rtol=0, atol=atol_herm)
    assert abs(np.trace(rho) - 1) <= atol_tr
    assert np.linalg.eigvalsh(rho).min() >= -atol_psd


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
