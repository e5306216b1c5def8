import numpy as np
import pytest

from rieszlab.core.structs import SampledOperator, SectorParams, TruncatedSystem


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sector_a1():
    return SectorParams(alpha=1.0, upsilon=1.0, omega=2.0)


@pytest.fixture
def sector_family():
    """lambda_n = -1/n^2 + i n for n = 1..100 without couplings."""
    n = np.arange(1, 101, dtype=float)
    return TruncatedSystem(
        eigenvalues=-1.0 / n ** 2 + 1j * n,
        b=np.zeros(100),
        f=np.zeros(100),
        sector=SectorParams(2.0, 1.0, 1.0),
        beta=1.0,
        gamma=1.0,
        label='boundary_family'
    )


@pytest.fixture
def deadbeat_system():
    """lambda = -1, b = 1, f = -1; sampled at tau = ln 2 this is d = 0.5, s = 0.5 and Delta = 0."""
    return TruncatedSystem.from_modes([(-1.0, 1.0, -1.0)], SectorParams(1.0, 1.0, 1.0), label='deadbeat')


@pytest.fixture
def deadbeat_op():
    return SampledOperator(tau=np.log(2.0), diag=[0.5], s_vec=[0.5], f_vec=[-1.0])


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long-running performance checks, deselect with -m "not slow"')
