import numpy as np
import pytest

from force2vec.graph import from_edges, generate_sbm


@pytest.fixture(scope="session")
def sbm1000():
    """Four planted blocks of 250 used by the quality checks."""
    return generate_sbm([250, 250, 250, 250], 0.05, 0.002, seed=42)


@pytest.fixture
def two_triangles():
    return from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


def random_graph(rng, n, p):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.shape[0]) < p
    return from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
