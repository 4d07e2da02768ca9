import pytest
from hypothesis import HealthCheck, settings

from repint import acceptance

settings.register_profile(
    "repint", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repint")

# filled by tests/test_acceptance.py, printed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def fixtures():
    return acceptance.load_fixtures()


@pytest.fixture(scope="session")
def T0(fixtures):
    return fixtures.models["T0"]


@pytest.fixture(scope="session")
def M1(fixtures):
    return fixtures.models["M1"]


@pytest.fixture(scope="session")
def M2(fixtures):
    return fixtures.models["M2"]


@pytest.fixture(scope="session")
def L1(fixtures):
    return fixtures.lifting


@pytest.fixture(scope="session", params=["T0", "M1", "M2"])
def any_model(request, fixtures):
    return fixtures.models[request.param]


def random_cmatrix(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
