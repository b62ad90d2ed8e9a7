import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_simplex(rng, size, K, spiky=True):
    """Dirichlet draws, optionally with some exact zeros and near-degenerate rows."""
    p = rng.dirichlet(np.full(K, 0.5), size=size)
    if spiky:
        mask = rng.random((size, K)) < 0.05
        mask[mask.all(axis=1)] = False
        p = np.where(mask, 0.0, p)
        p /= p.sum(axis=1, keepdims=True)
    return p


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
