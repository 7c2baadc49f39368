import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from geoflow.fields import GridSpec, MetricField, eval_expression

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

CONFORMAL_PHI = "0.2*cos(x)"
GENERAL = ("1.2 + 0.3*cos(y)", "0.2*sin(x + y)", "1 + 0.25*sin(x)")


def make_metric(kind, grid):
    if kind == "flat":
        return MetricField.flat(grid)
    if kind == "conformal":
        return MetricField.conformal(grid, eval_expression(CONFORMAL_PHI, grid))
    comps = [eval_expression(e, grid).values for e in GENERAL]
    return MetricField(grid, *comps, metric_id="general")


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(64, "spectral")


@pytest.fixture(scope="session")
def flat64(grid64):
    return make_metric("flat", grid64)


@pytest.fixture(scope="session")
def conformal64(grid64):
    return make_metric("conformal", grid64)


@pytest.fixture(scope="session")
def general64(grid64):
    return make_metric("general", grid64)


@pytest.fixture(scope="session", params=["flat", "conformal", "general"])
def metric64(request, grid64):
    return make_metric(request.param, grid64)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
