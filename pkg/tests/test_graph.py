import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import netflowsym as nf
from netflowsym.errors import BadIndex, IsolatedNode, NotLayerGraph, SelfLoop


def test_build_single_edge(single):
    assert single.n_nodes == 2 and single.n_edges == 1
    assert single.tails == (0,) and single.heads == (1,)


def test_build_star(star2):
    assert star2.n_nodes == 3
    assert nf.classify(star2).star == (0, "outbound")


def test_build_cycle_is_eulerian(cycle3):
    cls = nf.classify(cycle3)
    assert cls.eulerian and not cls.bipartite


def test_build_errors():
    with pytest.raises(BadIndex):
        nf.build_graph([])
    with pytest.raises(BadIndex):
        nf.build_graph([(0, 1)], n_nodes=1)
    with pytest.raises(SelfLoop):
        nf.build_graph([(0, 0), (0, 1)])
    with pytest.raises(IsolatedNode):
        nf.build_graph([(0, 2)])  # node 1 declared implicitly but unused
    with pytest.raises(IsolatedNode):
        nf.build_graph([(0, 1)], n_nodes=3)


def test_incidence_single_edge(single):
    inc = nf.incidence(single)
    assert inc.I_plus.tolist() == [[1], [0]]
    assert inc.I_minus.tolist() == [[0], [1]]
    assert np.array_equal(np.diag(inc.D), [1, 1])


def test_incidence_star(star2):
    inc = nf.incidence(star2)
    assert inc.I_plus[0].tolist() == [1, 1]
    assert np.array_equal(np.diag(inc.D), [2, 1, 1])


def test_incidence_cycle(cycle3):
    assert np.array_equal(np.diag(nf.incidence(cycle3).D), [2, 2, 2])


def test_degree_identity_on_sweep_sample():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, 8))
        edges = []
        for _ in range(m):
            t = int(rng.integers(n))
            h = int(rng.integers(n))
            if t != h:
                edges.append((t, h))
        if not edges:
            continue
        try:
            g = nf.build_graph(edges)
        except IsolatedNode:
            continue
        inc = nf.incidence(g)
        assert np.array_equal(inc.D, inc.I_tilde.T @ inc.I_tilde)


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=8))
@settings(max_examples=100, deadline=None)
def test_incidence_columns_sum_to_one(edges):
    edges = [(t, h) for t, h in edges if t != h]
    if not edges:
        return
    try:
        g = nf.build_graph(edges)
    except IsolatedNode:
        return
    inc = nf.incidence(g)
    assert np.array_equal(inc.I_plus.sum(axis=0), np.ones(g.n_edges, dtype=int))
    assert np.array_equal(inc.I_minus.sum(axis=0), np.ones(g.n_edges, dtype=int))
    assert np.array_equal(inc.D, inc.I_tilde.T @ inc.I_tilde)


def test_classify_completely_unconnected():
    g = nf.build_graph([(0, 1), (2, 3)])
    cls = nf.classify(g)
    assert cls.completely_unconnected and not cls.connected


def test_classify_orientation_awareness(graph_sweep):
    for g in graph_sweep[::37]:
        cls = nf.classify(g)
        rcls = nf.classify(g.reversed())
        assert cls.eulerian == rcls.eulerian
        assert cls.bipartite == rcls.bipartite
        assert (cls.star is None) == (rcls.star is None)
        if cls.star is not None and not (len(set(g.tails)) == 1 and len(set(g.heads)) == 1):
            # graphs with a unique tail AND a unique head are stars both ways
            center, direction = cls.star
            assert rcls.star == (center, "inbound" if direction == "outbound" else "outbound")


def test_completely_unconnected_matches_component_search(graph_sweep):
    # brute force: every weak component is a single edge
    from netflowsym.graph import weak_components

    for g in graph_sweep[::23]:
        comps = weak_components(g)
        brute = all(len(c) == 2 for c in comps) and g.n_edges == len(comps)
        assert nf.classify(g).completely_unconnected == brute


def test_layer_numbering_star(star2):
    perm, bounds = nf.canonical_layer_numbering(star2)
    assert bounds == (0, 2)
    assert sorted(perm) == [0, 1]


def test_layer_numbering_stacked_stars(stacked_stars):
    perm, bounds = nf.canonical_layer_numbering(stacked_stars)
    assert bounds == (0, 2, 4)
    assert sorted(perm[:2]) == [0, 1]
    assert sorted(perm[2:]) == [2, 3]


def test_layer_numbering_rejects_mixed_path():
    g = nf.build_graph([(0, 1), (0, 2), (2, 1)])
    assert nf.classify(g).layers is None
    with pytest.raises(NotLayerGraph):
        nf.canonical_layer_numbering(g)


def _check_numbering_properties(g):
    """Re-check the canonical numbering on the permuted edge order: edges
    sharing a tail or a head lie in one block, and an edge starting where
    another ends sits exactly one block later (cyclically)."""
    perm, bounds = nf.canonical_layer_numbering(g)
    L = len(bounds) - 1
    block = {}
    for pos, e in enumerate(perm):
        for p in range(L):
            if bounds[p] < pos + 1 <= bounds[p + 1]:
                block[e] = p
    layers = nf.classify(g).layers
    cyclic = layers.cyclic
    for a in range(g.n_edges):
        for b in range(g.n_edges):
            if g.tails[a] == g.tails[b] or g.heads[a] == g.heads[b]:
                assert block[a] == block[b]
            if g.tails[a] == g.heads[b]:
                expected = (block[b] + 1) % L if cyclic else block[b] + 1
                assert block[a] == expected


def test_layer_numbering_validates(stacked_stars, cycle3, star2):
    for g in [stacked_stars, cycle3, star2]:
        _check_numbering_properties(g)


def test_layer_graphs_in_sweep_validate(graph_sweep):
    count = 0
    for g in graph_sweep[::11]:
        if nf.classify(g).layers is not None:
            _check_numbering_properties(g)
            count += 1
    assert count > 0


def test_graph_json_roundtrip(tmp_path, star2):
    from netflowsym.graph import graph_from_dict, graph_to_dict

    d = graph_to_dict(star2)
    assert d == {"nodes": 3, "edges": [[0, 1], [0, 2]]}
    assert graph_from_dict(d) == star2
    path = tmp_path / "g.json"
    path.write_text('{"nodes": 3, "edges": [[0, 1], [0, 2]]}')
    assert nf.load_graph(path) == star2
