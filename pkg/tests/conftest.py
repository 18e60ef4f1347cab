import numpy as np
import pytest

from relay_aoi.core import TwoHopInstance

ACCEPTANCE_LINES = []


@pytest.fixture
def example1():
    return TwoHopInstance([2, 6, 7, 11, 13], [1, 4, 9, 10, 15], 1, 2, 19)


@pytest.fixture
def example2():
    return TwoHopInstance([0, 4, 4, 9, 13], [1, 3, 6, 10, 12], 1, 2, 16)


@pytest.fixture
def example2_t18():
    return TwoHopInstance([0, 4, 4, 9, 13], [1, 3, 6, 10, 12], 1, 2, 18)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
