import pytest
from hypothesis import HealthCheck, settings

from transitq import model, solver

settings.register_profile(
    "suite",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def reference():
    return model.reference_scenario()


@pytest.fixture(scope="session")
def reference_report(reference):
    # analyzed once for the whole run; several suites read from it
    return solver.analyze_route(reference)
