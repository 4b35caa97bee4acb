import numpy as np
import pytest

_ACCEPTANCE = []


def record_criterion(label, ok, detail):
    """Store one acceptance line; printed in the terminal summary."""
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    _ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
