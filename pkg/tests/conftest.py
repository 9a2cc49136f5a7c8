import numpy as np
import pytest

import percoproj as pp

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d} [{name}]: {'PASS' if passed else 'FAIL'} — {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params33():
    return pp.PercolationParams(3, 0.7)


@pytest.fixture(scope="session")
def params22():
    return pp.PercolationParams(2, 0.8)


@pytest.fixture(scope="session")
def tree33(params33):
    """One moderately deep k=3 realization shared across tests."""
    return pp.generate(params33, 12345, 6)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260808)
