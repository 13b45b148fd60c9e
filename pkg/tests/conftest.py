import itertools

import numpy as np
import pytest

from polman.graph import SignedGraph
from polman.synthetic import random_signed_graph, two_clique_graph


def path_graph(n, sign=1):
    edges = [(i, i + 1) for i in range(n - 1)]
    return SignedGraph.from_edges(edges if sign > 0 else (), edges if sign < 0 else (), nodes=range(n))


def complete_graph(n):
    return SignedGraph.from_edges(itertools.combinations(range(n), 2))


def cliques_with_bridges(size=6, bridges=((0, 6), (1, 7), (2, 8))):
    a = range(size)
    b = range(size, 2 * size)
    pos = list(itertools.combinations(a, 2)) + list(itertools.combinations(b, 2))
    return SignedGraph.from_edges(pos, bridges)


@pytest.fixture
def clique_pair():
    return cliques_with_bridges()


@pytest.fixture
def polarized():
    return two_clique_graph(0)


def fixture_graphs():
    """Five connected signed graphs of assorted shape."""
    return [
        two_clique_graph(0),
        two_clique_graph(1, clique_size=10, bridges=6, outsiders=6),
        random_signed_graph(40, 0.15, 0.3, seed=2),
        random_signed_graph(60, 0.08, 0.5, seed=3),
        noisy_factions(12, seed=4),
    ]


def noisy_factions(size, p_in=0.7, p_out=0.15, seed=0):
    """Two dense positive groups with sparse negative ties; no exact symmetries."""
    r = np.random.default_rng(seed)
    pos, neg = [], []
    for u, v in itertools.combinations(range(2 * size), 2):
        same = (u < size) == (v < size)
        if same and r.random() < p_in:
            pos.append((u, v))
        elif not same and r.random() < p_out:
            neg.append((u, v))
    g = SignedGraph.from_edges(pos, neg, nodes=range(2 * size))
    assert g.is_connected()
    return g


def dense_quad(L, b):
    from polman.spectral import dense_pseudoinverse
    return float(b @ dense_pseudoinverse(L) @ b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
