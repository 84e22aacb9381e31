import numpy as np
import pytest

from transprop import Partition, ScoreMatrix


def planted_instance(rng, n, inside=(-3.0, 1.0), across=(3.0, 1.0)):
    """Scores drawn around a random planted partition."""
    groups = int(rng.integers(1, n + 1))
    labels = rng.integers(0, groups, size=n)
    same = labels[:, None] == labels[None, :]
    s = np.where(same, rng.normal(*inside, size=(n, n)), rng.normal(*across, size=(n, n)))
    s = np.triu(s, 1)
    return ScoreMatrix(s + s.T), Partition.from_labels(labels.tolist())


def random_scores(rng, n, scale=1.0):
    s = np.triu(rng.normal(scale=scale, size=(n, n)), 1)
    return ScoreMatrix(s + s.T)


def random_partition(rng, n):
    return Partition.from_labels(rng.integers(0, n, size=n).tolist())


@pytest.fixture
def rng():
    return np.random.default_rng(20150604)


@pytest.fixture
def frustrated():
    """The three-point example: scores 01 = -2, 12 = -1, 02 = +3."""
    return ScoreMatrix.from_upper(3, {(0, 1): -2.0, (1, 2): -1.0, (0, 2): 3.0})


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
