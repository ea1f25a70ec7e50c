"""
Pytest configuration and fixtures
测试配置和固件
"""

import pytest

from gridkrig.schemas.spectral import CovarianceFamily, Profile
from gridkrig.schemas.theory import QuadratureSpec
from gridkrig.services.spectral import make_model


LORENTZ_FAMILIES = [CovarianceFamily.EXPONENTIAL, CovarianceFamily.MATERN32, CovarianceFamily.MATERN52]
ALL_FAMILIES = LORENTZ_FAMILIES + [CovarianceFamily.SQUARED_EXPONENTIAL]


@pytest.fixture
def verbatim_exponential():
    """Factory for the PaperVerbatim exponential, F = θ/(θ²+ω²)"""
    def _make(theta: float):
        return make_model(CovarianceFamily.EXPONENTIAL, theta, Profile.PAPER_VERBATIM)
    return _make


@pytest.fixture
def consistent_model():
    def _make(family, theta: float):
        return make_model(family, theta, Profile.CONSISTENT)
    return _make


@pytest.fixture
def tight_quadrature():
    """Tolerances for checks against analytic values at 1e-10"""
    return QuadratureSpec(relative_tolerance=1e-11, absolute_tolerance=1e-11)


@pytest.fixture
def single_worker(mocker):
    """Run Monte Carlo replicates on one thread"""
    from gridkrig.services import simulate
    mocker.patch.object(simulate.monte_carlo_runner, "workers", 1)
    return simulate.monte_carlo_runner
