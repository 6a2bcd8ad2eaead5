import os

import numpy as np
import pytest

from lcic.rng import RngState

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return RngState(12345)


@pytest.fixture
def np_rng():
    return np.random.default_rng(2024)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def pytest_configure(config):
    os.environ.setdefault("LCIC_THREADS", "1")
