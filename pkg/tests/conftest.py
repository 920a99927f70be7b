import os

import pytest
from hypothesis import HealthCheck, settings

from mobius_ce.shell import FIXTURES, load_fixture

settings.register_profile(
    "default",
    derandomize=True,
    max_examples=int(os.environ.get("MOBIUS_EXAMPLES", "60")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("default")

RATIONAL_FIXTURES = ("example1", "example2", "quartic", "airy", "flat")


@pytest.fixture(scope="session")
def problems():
    return {name: load_fixture(name) for name in FIXTURES}


@pytest.fixture(scope="session")
def structures(problems):
    return {name: p.structure() for name, p in problems.items()}
