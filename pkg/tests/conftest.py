import numpy as np
import pytest

from hardycabello.optimizer import SolverConfig
from hardycabello.scenarios import Argument, run_suite

# (criterion number, title, passed, detail) appended by test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def suite_rows():
    """Full suite: both arguments, all principles, 16 cases, default config."""
    rows = []
    for arg in Argument:
        rows += run_suite(arg, cfg=SolverConfig())
    return rows


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} [{status}] {title}: {detail}")
