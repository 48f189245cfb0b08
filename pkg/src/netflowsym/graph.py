"""Directed metric graphs: construction, incidence structure, classification.

Every edge is parametrized over [0, 1]; physical lengths enter through the
coefficient field, never through the geometry.  A graph is stored as parallel
tail/head arrays (``tails[j]`` is the initial endpoint of edge ``j``,
``heads[j]`` the terminal one).  Multiple edges between the same pair of
nodes are allowed, self-loops are not.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BadIndex, IsolatedNode, NotLayerGraph, SelfLoop


@dataclass(frozen=True)
class MetricGraph:
    """A finite directed graph with unit-interval edges."""

    n_nodes: int
    n_edges: int
    tails: tuple[int, ...]
    heads: tuple[int, ...]

    def reversed(self) -> "MetricGraph":
        """The same graph with every edge orientation flipped."""
        return MetricGraph(self.n_nodes, self.n_edges, self.heads, self.tails)


@dataclass(frozen=True)
class IncidenceSet:
    """Incidence matrices of a graph.

    ``I_plus[k, j] = 1`` iff edge j starts at node k, ``I_minus[k, j] = 1``
    iff it ends there.  ``I_tilde`` stacks the transposes, so that
    ``I_tilde @ d = (f(0), f(1))`` for the common nodal values ``d`` of a
    node-continuous function f.  ``D`` is the diagonal matrix of total node
    degrees and satisfies ``D = I_tilde.T @ I_tilde`` exactly.
    """

    I_plus: np.ndarray
    I_minus: np.ndarray
    I_tilde: np.ndarray
    D: np.ndarray


@dataclass(frozen=True)
class LayerDecomposition:
    """An ordered partition of the nodes such that every edge advances one
    layer (the last layer wraps to the first when ``cyclic``)."""

    node_layers: tuple[tuple[int, ...], ...]
    edge_layers: tuple[tuple[int, ...], ...]
    symmetric: bool
    in_degrees: tuple[Optional[int], ...]
    out_degrees: tuple[Optional[int], ...]
    cyclic: bool


@dataclass(frozen=True)
class GraphClass:
    connected: bool
    simple: bool
    completely_unconnected: bool
    bipartite: bool
    eulerian: bool
    star: Optional[tuple[int, str]]
    layers: Optional[LayerDecomposition]

    def to_dict(self) -> dict:
        d = {
            "connected": self.connected,
            "simple": self.simple,
            "completely_unconnected": self.completely_unconnected,
            "bipartite": self.bipartite,
            "eulerian": self.eulerian,
            "star": None,
            "layers": None,
        }
        if self.star is not None:
            d["star"] = {"center": self.star[0], "direction": self.star[1]}
        if self.layers is not None:
            d["layers"] = {
                "node_layers": [list(p) for p in self.layers.node_layers],
                "edge_layers": [list(p) for p in self.layers.edge_layers],
                "symmetric": self.layers.symmetric,
                "in_degrees": list(self.layers.in_degrees),
                "out_degrees": list(self.layers.out_degrees),
                "cyclic": self.layers.cyclic,
            }
        return d


def build_graph(edge_list: Sequence[tuple[int, int]], n_nodes: Optional[int] = None) -> MetricGraph:
    """Build a graph from (tail, head) pairs.

    Node indices must be contiguous from 0; ``n_nodes`` may declare extra
    nodes explicitly, in which case every declared node must be incident to
    at least one edge.
    """
    if len(edge_list) == 0:
        raise BadIndex("edge list must be nonempty")
    tails, heads = [], []
    for e in edge_list:
        if len(e) != 2:
            raise BadIndex(f"edge {e!r} is not a (tail, head) pair")
        t, h = int(e[0]), int(e[1])
        if t < 0 or h < 0:
            raise BadIndex(f"negative node index in edge {e!r}")
        if t == h:
            raise SelfLoop(f"edge {e!r} is a self-loop")
        tails.append(t)
        heads.append(h)
    used = set(tails) | set(heads)
    n = max(used) + 1 if n_nodes is None else int(n_nodes)
    if max(used) >= n:
        raise BadIndex(f"node index {max(used)} out of range for {n} nodes")
    missing = sorted(set(range(n)) - used)
    if missing:
        raise IsolatedNode(f"nodes {missing} have no incident edge")
    return MetricGraph(n, len(tails), tuple(tails), tuple(heads))


def incidence(g: MetricGraph) -> IncidenceSet:
    """Incidence matrices, the stacked endpoint map and the degree matrix."""
    n, m = g.n_nodes, g.n_edges
    I_plus = np.zeros((n, m), dtype=int)
    I_minus = np.zeros((n, m), dtype=int)
    for j in range(m):
        I_plus[g.tails[j], j] = 1
        I_minus[g.heads[j], j] = 1
    I_tilde = np.vstack([I_plus.T, I_minus.T])
    D = I_tilde.T @ I_tilde
    return IncidenceSet(I_plus, I_minus, I_tilde, D)


def in_degrees(g: MetricGraph) -> np.ndarray:
    return np.bincount(np.asarray(g.heads), minlength=g.n_nodes)


def out_degrees(g: MetricGraph) -> np.ndarray:
    return np.bincount(np.asarray(g.tails), minlength=g.n_nodes)


def _adjacency_lists(g: MetricGraph):
    """Undirected adjacency as (neighbor, edge, +1 if traversed tail->head)."""
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(g.n_nodes)]
    for j, (t, h) in enumerate(zip(g.tails, g.heads)):
        adj[t].append((h, j, +1))
        adj[h].append((t, j, -1))
    return adj


def weak_components(g: MetricGraph) -> list[list[int]]:
    """Connected components of the underlying undirected graph."""
    adj = _adjacency_lists(g)
    seen = [False] * g.n_nodes
    comps = []
    for start in range(g.n_nodes):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w, _, _ in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def _layer_decomposition(g: MetricGraph) -> Optional[LayerDecomposition]:
    """Find the finest layer decomposition, or None if no nontrivial one exists.

    Assign integer potentials along a BFS tree of each weak component so that
    traversing an edge forward raises the potential by one.  Every non-tree
    edge contributes a discrepancy; a decomposition into L >= 2 layers exists
    iff L divides all discrepancies.  The finest choice (L = gcd, or the full
    potential range if there are no discrepancies) is canonical: coarser
    decompositions merge its layers and can only lose degree constancy.
    """
    adj = _adjacency_lists(g)
    label = [None] * g.n_nodes
    comp_of = [None] * g.n_nodes
    comp_min: list[int] = []
    comp_max: list[int] = []
    gcd = 0
    for ci, comp in enumerate(weak_components(g)):
        root = comp[0]
        label[root] = 0
        comp_of[root] = ci
        queue = [root]
        while queue:
            v = queue.pop()
            for w, _, sign in adj[v]:
                cand = label[v] + sign
                if label[w] is None:
                    label[w] = cand
                    comp_of[w] = ci
                    queue.append(w)
                elif label[w] != cand:
                    gcd = math.gcd(gcd, abs(label[w] - cand))
        comp_min.append(min(label[v] for v in comp))
        comp_max.append(max(label[v] for v in comp))

    if gcd == 1:
        return None  # only the vacuous one-layer "decomposition" remains
    if gcd == 0:
        L = max(hi - lo + 1 for lo, hi in zip(comp_min, comp_max))
        layer_of = [label[v] - comp_min[comp_of[v]] for v in range(g.n_nodes)]
        cyclic = False
    else:
        L = gcd
        layer_of = [(label[v] - comp_min[comp_of[v]]) % L for v in range(g.n_nodes)]
        cyclic = any(layer_of[t] == L - 1 for t in g.tails)

    node_layers = tuple(
        tuple(v for v in range(g.n_nodes) if layer_of[v] == p) for p in range(L)
    )
    if any(len(p) == 0 for p in node_layers):
        return None
    edge_layers = tuple(
        tuple(j for j in range(g.n_edges) if layer_of[g.tails[j]] == p) for p in range(L)
    )
    while edge_layers and len(edge_layers[-1]) == 0:
        edge_layers = edge_layers[:-1]

    indeg, outdeg = in_degrees(g), out_degrees(g)
    in_per, out_per, symmetric = [], [], True
    for nodes in node_layers:
        ins = {int(indeg[v]) for v in nodes}
        outs = {int(outdeg[v]) for v in nodes}
        in_per.append(ins.pop() if len(ins) == 1 else None)
        out_per.append(outs.pop() if len(outs) == 1 else None)
        if in_per[-1] is None or out_per[-1] is None:
            symmetric = False
    return LayerDecomposition(
        node_layers, edge_layers, symmetric, tuple(in_per), tuple(out_per), cyclic
    )


def classify(g: MetricGraph) -> GraphClass:
    """Compute all structural flags and the layer decomposition if one exists."""
    indeg, outdeg = in_degrees(g), out_degrees(g)
    deg = indeg + outdeg
    connected = len(weak_components(g)) == 1
    pairs = [frozenset((t, h)) for t, h in zip(g.tails, g.heads)]
    simple = len(pairs) == len(set(pairs))
    completely_unconnected = bool(np.all(deg == 1))
    bipartite = bool(np.all((indeg == 0) | (outdeg == 0)))
    eulerian = bool(np.all(indeg == outdeg))

    star = None
    tails, heads = set(g.tails), set(g.heads)
    if len(tails) == 1:
        star = (next(iter(tails)), "outbound")
    elif len(heads) == 1:
        star = (next(iter(heads)), "inbound")

    return GraphClass(
        connected=connected,
        simple=simple,
        completely_unconnected=completely_unconnected,
        bipartite=bipartite,
        eulerian=eulerian,
        star=star,
        layers=_layer_decomposition(g),
    )


def canonical_layer_numbering(g: MetricGraph) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Edge permutation grouping the layers contiguously, plus layer bounds.

    Returns ``(perm, bounds)``: ``perm[i]`` is the original index of the edge
    at canonical position ``i``, and 1-indexed canonical edge ``i`` lies in
    layer ``p`` iff ``bounds[p-1] < i <= bounds[p]``.  Raises NotLayerGraph
    if the graph has no layer decomposition.
    """
    layers = classify(g).layers
    if layers is None:
        raise NotLayerGraph("graph admits no layer decomposition")
    perm: list[int] = []
    bounds = [0]
    for block in layers.edge_layers:
        perm.extend(block)
        bounds.append(len(perm))
    return tuple(perm), tuple(bounds)


def graph_to_dict(g: MetricGraph) -> dict:
    return {"nodes": g.n_nodes, "edges": [[t, h] for t, h in zip(g.tails, g.heads)]}


def graph_from_dict(d: dict) -> MetricGraph:
    return build_graph([tuple(e) for e in d["edges"]], n_nodes=d.get("nodes"))


def load_graph(path) -> MetricGraph:
    """Read a graph description file {"nodes": n, "edges": [[tail, head], ...]}."""
    with open(path) as fh:
        return graph_from_dict(json.load(fh))
