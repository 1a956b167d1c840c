import numpy as np
import pytest

from urnmeasure.distributions import PowerLawPmf

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def record(number: int, title: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture(scope="session")
def half_model():
    return PowerLawPmf(0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)
