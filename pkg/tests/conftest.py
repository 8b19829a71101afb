import numpy as np
import pytest

from jpc.model import NEVER, RequestRealization


def items(*one_based):
    """Item set written with the 1-based labels used in the documentation."""
    return frozenset(i - 1 for i in one_based)


def realization(*one_based_slots):
    """Realization from slots; ``None`` marks a never-requested item."""
    return RequestRealization.from_slots(one_based_slots)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


__all__ = ["NEVER", "items", "realization"]


# One verdict line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.rstrip("abc")), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
