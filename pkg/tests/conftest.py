import numpy as np
import pytest

# One line per acceptance criterion, filled by tests/test_acceptance.py.
ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.rstrip("abc")), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
