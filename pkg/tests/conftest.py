import numpy as np
import pytest

from ccmn.core import MultiLabelDataset, NoiseSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def spec_ab():
    """rho_pos = (0.1, 0.2), rho_neg = (0.2, 0.1): the worked pairwise example."""
    return NoiseSpec([0.1, 0.2], [0.2, 0.1])


@pytest.fixture
def tiny_dataset():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.5], [0.3, -0.2], [2.0, 0.0], [0.0, -1.0]])
    Y = np.array([[1, -1, 1], [-1, 1, -1], [1, 1, -1], [-1, -1, 1], [1, -1, -1], [1, 1, 1], [-1, 1, -1]])
    return MultiLabelDataset(X, Y)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Collect one summary line per acceptance criterion; echoed at session end."""

    def emit(line):
        print(line, flush=True)
        _ACCEPTANCE_LINES.append(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
