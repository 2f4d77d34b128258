import numpy as np
import pytest

from divlab.core import GroundSet, TabulatedDiversity, popcounts

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def g3():
    return GroundSet.of_size(3)


@pytest.fixture
def size_minus_one():
    """delta(A) = |A| - 1 on three points."""
    g = GroundSet.of_size(3)
    return TabulatedDiversity(g, np.maximum(popcounts(3) - 1, 0).astype(float))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
