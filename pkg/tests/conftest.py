import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

# one seed for every stochastic acceptance check, fixed before any run
SUITE_SEED = 12345

_ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    print(line)
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(SUITE_SEED)
