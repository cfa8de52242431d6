import pytest

from circumnav import analysis as an
from circumnav import scenario
from circumnav.sim import run


@pytest.fixture(scope="session")
def section5_config():
    return scenario.load("section5.scenario")


@pytest.fixture(scope="session")
def section5_log(section5_config):
    return run(section5_config)


@pytest.fixture(scope="session")
def section5_errors(section5_log):
    return an.compute_errors(section5_log)


@pytest.fixture(scope="session")
def section5_baseline_log(section5_config):
    return run(section5_config.replace(controller="baseline"))


#: one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
