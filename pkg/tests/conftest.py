import itertools

import numpy as np
import pytest

import netflowsym as nf


@pytest.fixture
def single():
    return nf.build_graph([(0, 1)])


@pytest.fixture
def star2():
    """Two edges outgoing from node 0."""
    return nf.build_graph([(0, 1), (0, 2)])


@pytest.fixture
def cycle3():
    return nf.build_graph([(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def stacked_stars():
    return nf.build_graph([(0, 1), (0, 2), (1, 3), (2, 3)])


@pytest.fixture
def k22():
    """Regular bipartite graph: 0,1 only outgoing; 2,3 only incoming."""
    return nf.build_graph([(0, 2), (0, 3), (1, 2), (1, 3)])


def random_projection(m, rng, ones=None):
    """Random orthogonal projection from a random subspace.

    ones="in" forces the all-ones vector into the range, ones="out" forces
    it into the kernel.
    """
    r = int(rng.integers(1, m + 1))
    B = rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))
    if ones == "in":
        B[:, 0] = 1.0
    elif ones == "out":
        B = B - B.mean(axis=0, keepdims=True)
    return nf.subspace_projection(B.T)


def sweep_graphs(max_nodes=4, max_edges=5):
    """All connected directed multigraphs with contiguous node labels."""
    graphs = []
    for n in range(2, max_nodes + 1):
        pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
        for m in range(1, max_edges + 1):
            for combo in itertools.combinations_with_replacement(pairs, m):
                used = set()
                for t, h in combo:
                    used.update((t, h))
                if used != set(range(n)):
                    continue
                g = nf.build_graph(list(combo))
                if nf.classify(g).connected:
                    graphs.append(g)
    return graphs


@pytest.fixture(scope="session")
def graph_sweep():
    return sweep_graphs()
