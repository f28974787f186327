import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sisde.params import SisParams  # noqa: E402


@pytest.fixture
def p1():
    return SisParams(N=100.0, beta=0.5, mu_plus_gamma=25.0, sigma=0.02, i0=10.0)


@pytest.fixture
def p_extinct():
    return SisParams(N=100.0, beta=0.2, mu_plus_gamma=25.0, sigma=0.02, i0=10.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
