import numpy as np
import pytest

from xelliptic.fields import euclidean_family, heisenberg_family
from xelliptic.grid import build_ball_domain

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def heis():
    return heisenberg_family(1)


@pytest.fixture(scope="session")
def eucl3():
    return euclidean_family(3)


@pytest.fixture(scope="session")
def heis_ball9(heis):
    return build_ball_domain(heis, 1.0, 9, gauge="heisenberg")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
