import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from muskat_energy.model import DomainSpec, FluidParams, InterfaceProfile, validate_config

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=30
)
settings.load_profile("default")


def two_phase(eta, mu=(1.0, 1.0), sigma=0.0, X=4.0, D=4.0, rho=(0.0, 1.0)):
    params = FluidParams(mu[0], mu[1], rho[0], rho[1], sigma)
    return validate_config(params, eta, DomainSpec.flat(X, D))


@pytest.fixture
def tent():
    return InterfaceProfile.tent(1.0, 1.0)


@pytest.fixture
def tent_problem(tent):
    return two_phase(tent)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
