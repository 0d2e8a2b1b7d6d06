import os

import pytest
from hypothesis import HealthCheck, settings

from llgselfsim.model import ModelParams

settings.register_profile(
    "numerics",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "numerics"))


@pytest.fixture(scope="session")
def field_08_04():
    from llgselfsim.selfsim import build_field

    return build_field(ModelParams(0.8, 0.4))


@pytest.fixture(scope="session")
def trajs_08_04():
    from llgselfsim.complex_ode import solve_f

    p = ModelParams(0.8, 0.4)
    return tuple(solve_f(p, j, 40.0) for j in (1, 2, 3))


# One line per acceptance criterion, collected by tests/test_acceptance.py.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda ln: int(ln.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
