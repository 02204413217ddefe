import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fronttrack.flux_model import coupled_drift, decoupled_burgers

settings.register_profile(
    "default", deadline=None, max_examples=60, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile(
    "thorough", deadline=None, max_examples=600, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def burgers():
    return decoupled_burgers()


@pytest.fixture(scope="session")
def drift():
    return coupled_drift()


@pytest.fixture(scope="session", params=["decoupled_burgers", "coupled_drift"])
def model(request):
    return decoupled_burgers() if request.param == "decoupled_burgers" else coupled_drift()


def K_a(a):
    return a * np.ones((2, 2))


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail=""):
    """Remember and print one PASS/FAIL line; the test still asserts ``ok`` itself."""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
