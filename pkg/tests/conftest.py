import pytest
from hypothesis import HealthCheck, settings

from pcnet import fixtures, propagate_all

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def tiny():
    return fixtures.load("tiny")


@pytest.fixture(scope="session")
def tiny_p(tiny):
    return propagate_all(tiny)


@pytest.fixture(scope="session")
def machining():
    return fixtures.load("machining")


@pytest.fixture(scope="session")
def machining_p(machining):
    return propagate_all(machining)


@pytest.fixture(scope="session")
def dominance_p():
    return propagate_all(fixtures.load("dominance"))
