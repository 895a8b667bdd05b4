import numpy as np
import pytest

from acceptance_log import LINES as ACCEPTANCE_LINES
from decolab.fock import ModelParams


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE_LINES):
        parts = ACCEPTANCE_LINES[crit]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"{crit}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
