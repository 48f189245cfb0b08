"""Piecewise-linear discretization of the energy form on a metric graph.

The discrete space consists of P1 (hat function) elements on a uniform grid
shared by all edges.  Node continuity is built into the DOF map: the two
endpoint values of every edge are identified with the global DOF of the
corresponding node, so any coefficient vector represents a function that is
continuous across nodes by construction.

Assembled matrices: the Gram (mass) matrix of the hat basis, the stiffness
matrix discretizing (C f' | g'), and the node-term matrix discretizing
(M d^f | d^g); the system matrix is stiffness - node_term.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

from .coupling import CouplingField, as_node_matrix
from .errors import DimensionMismatch, DiscontinuousAtNode, NotContinuous
from .graph import IncidenceSet, MetricGraph, incidence

_NODE_TOL = 1e-9
_HERM_TOL = 1e-12


@dataclass(frozen=True)
class DofMap:
    """Global degree-of-freedom layout: node DOFs first, then per-edge
    interior DOFs.  ``edge_dofs[j]`` lists edge j's global indices from
    x = 0 to x = 1."""

    graph: MetricGraph
    n_per_edge: int
    total_dofs: int
    edge_dofs: tuple[tuple[int, ...], ...]
    h: float

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_per_edge + 2)


def build_dof_map(g: MetricGraph, n_per_edge: int) -> DofMap:
    """Uniform grid with ``n_per_edge`` interior points per edge."""
    if n_per_edge < 0:
        raise DimensionMismatch("n_per_edge must be nonnegative")
    n, m = g.n_nodes, g.n_edges
    total = n + m * n_per_edge
    edge_dofs = []
    for j in range(m):
        interior = [n + j * n_per_edge + k for k in range(n_per_edge)]
        edge_dofs.append(tuple([g.tails[j]] + interior + [g.heads[j]]))
    return DofMap(g, n_per_edge, total, tuple(edge_dofs), 1.0 / (n_per_edge + 1))


@dataclass
class StateVector:
    """Coefficient vector of a function in the discretized space."""

    dof: DofMap
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != (self.dof.total_dofs,):
            raise DimensionMismatch(
                f"expected {self.dof.total_dofs} coefficients, got {self.coefficients.shape}"
            )

    def edge_values(self, j: int) -> np.ndarray:
        """Grid values of the function on edge j, from x = 0 to x = 1."""
        return self.coefficients[list(self.dof.edge_dofs[j])]

    def grid_values(self) -> np.ndarray:
        """All edge values as an (m, n_per_edge + 2) array."""
        return self.coefficients[np.array(self.dof.edge_dofs)]

    def evaluate(self, j: int, x: float) -> complex:
        vals = self.edge_values(j)
        return complex(np.interp(x, self.dof.grid, vals.real) + 1j * np.interp(x, self.dof.grid, vals.imag))

    def nodal_trace(self) -> np.ndarray:
        """The common node values d^u (node DOFs come first in the layout)."""
        return self.coefficients[: self.dof.graph.n_nodes].copy()


@dataclass
class DiscreteSystem:
    """Assembled matrices plus the ingredients they came from."""

    dof: DofMap
    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    node_term: sp.csr_matrix
    a_matrix: sp.csr_matrix
    hermitian: bool
    coupling: CouplingField = field(repr=False)
    node_matrix: np.ndarray = field(repr=False)
    inc: IncidenceSet = field(repr=False)

    @property
    def graph(self) -> MetricGraph:
        return self.dof.graph

    def mass_norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(abs(np.vdot(u, self.mass @ u).real)))

    def mass_inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return complex(np.vdot(v, self.mass @ u))

    def energy(self, u: np.ndarray) -> complex:
        return complex(np.vdot(u, self.a_matrix @ u))


def assemble(g: MetricGraph, dof: DofMap, C: CouplingField, M) -> DiscreteSystem:
    """Assemble mass, stiffness and node-term matrices.

    Stiffness couples edge i (test) to edge j (trial) through the
    coefficient c_ij, integrated with 2-point Gauss quadrature per element;
    since all edges share the same grid, cross-edge blocks reuse the same
    local element matrices.  Blocks are only created where c_ij is not
    identically zero.
    """
    if C.m != g.n_edges:
        raise DimensionMismatch(f"coupling is {C.m}x{C.m} but graph has {g.n_edges} edges")
    M = as_node_matrix(M, g.n_nodes)
    if dof.graph is not g and dof.graph != g:
        raise DimensionMismatch("dof map was built for a different graph")
    m, n = g.n_edges, g.n_nodes
    h = dof.h
    n_el = dof.n_per_edge + 1
    edge_idx = np.array(dof.edge_dofs)  # (m, n_el + 1)

    # Gauss points of every element, shared by all edges.
    left = np.arange(n_el) * h
    gauss = np.concatenate([left + h * (0.5 - 0.5 / np.sqrt(3.0)),
                            left + h * (0.5 + 0.5 / np.sqrt(3.0))])
    cvals = C.evaluate_many(gauss)  # (2 * n_el, m, m)
    cbar = 0.5 * (cvals[:n_el] + cvals[n_el:])  # per-element average of c_ij

    rows, cols, vals = [], [], []
    local_r = np.array([0, 0, 1, 1])
    local_c = np.array([0, 1, 0, 1])
    local_s = np.array([1.0, -1.0, -1.0, 1.0]) / h
    for i in range(m):
        for j in range(m):
            if C.entry_is_zero(i, j):
                continue
            ri = edge_idx[i]
            cj = edge_idx[j]
            for a in range(4):
                rows.append(ri[np.arange(n_el) + local_r[a]])
                cols.append(cj[np.arange(n_el) + local_c[a]])
                vals.append(cbar[:, i, j] * local_s[a])
    if rows:
        stiffness = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dof.total_dofs, dof.total_dofs),
        ).tocsr()
    else:
        stiffness = sp.csr_matrix((dof.total_dofs, dof.total_dofs), dtype=complex)

    mrows, mcols, mvals = [], [], []
    local_m = h / 6.0 * np.array([2.0, 1.0, 1.0, 2.0])
    for j in range(m):
        ej = edge_idx[j]
        for a in range(4):
            mrows.append(ej[np.arange(n_el) + local_r[a]])
            mcols.append(ej[np.arange(n_el) + local_c[a]])
            mvals.append(np.full(n_el, local_m[a]))
    mass = sp.coo_matrix(
        (np.concatenate(mvals), (np.concatenate(mrows), np.concatenate(mcols))),
        shape=(dof.total_dofs, dof.total_dofs),
    ).tocsr()

    node_term = sp.lil_matrix((dof.total_dofs, dof.total_dofs), dtype=complex)
    node_term[:n, :n] = M
    node_term = node_term.tocsr()

    a_matrix = (stiffness - node_term).tocsr()

    c_herm = bool(np.max(np.abs(cvals - np.conj(np.swapaxes(cvals, 1, 2)))) <= _HERM_TOL)
    hermitian = c_herm and bool(np.max(np.abs(M - M.conj().T)) <= _HERM_TOL)
    if hermitian:
        a_matrix = (0.5 * (a_matrix + a_matrix.conj().T)).tocsr()

    return DiscreteSystem(dof, mass, stiffness.astype(complex).tocsr(),
                          node_term, a_matrix.astype(complex).tocsr(),
                          hermitian, C, M, incidence(g))


def interpolate(g: MetricGraph, dof: DofMap,
                edge_functions: Sequence[Callable]) -> StateVector:
    """Sample per-edge callables on the grid.

    The functions must agree at shared nodes within 1e-9; interior grid
    values are taken verbatim, node DOFs get the (consistent) common value.
    """
    if len(edge_functions) != g.n_edges:
        raise DimensionMismatch("need one function per edge")
    grid = dof.grid
    samples = np.empty((g.n_edges, grid.size), dtype=complex)
    for j, f in enumerate(edge_functions):
        try:
            vals = np.asarray(f(grid), dtype=complex)
            if vals.shape != grid.shape:
                raise TypeError
        except TypeError:
            vals = np.array([f(x) for x in grid], dtype=complex)
        samples[j] = vals

    coeffs = np.zeros(dof.total_dofs, dtype=complex)
    node_vals: dict[int, list[complex]] = {k: [] for k in range(g.n_nodes)}
    for j in range(g.n_edges):
        node_vals[g.tails[j]].append(samples[j, 0])
        node_vals[g.heads[j]].append(samples[j, -1])
    for k, vals in node_vals.items():
        if max(abs(v - vals[0]) for v in vals) > _NODE_TOL:
            raise DiscontinuousAtNode(
                f"edge functions disagree at node {k}: values {vals}"
            )
        coeffs[k] = np.mean(vals)
    for j in range(g.n_edges):
        for k in range(dof.n_per_edge):
            coeffs[dof.edge_dofs[j][k + 1]] = samples[j, k + 1]
    return StateVector(dof, coeffs)


def nodal_vector(f0, f1, g: MetricGraph, tol: float = _NODE_TOL) -> np.ndarray:
    """Recover the common node values from endpoint traces.

    Computes d = D^-1 I_tilde^T (f0, f1); raises NotContinuous when the
    traces are not reproduced by I_tilde d within tolerance, i.e. when they
    do not come from a node-continuous function.
    """
    f0 = np.asarray(f0, dtype=complex)
    f1 = np.asarray(f1, dtype=complex)
    if f0.shape != (g.n_edges,) or f1.shape != (g.n_edges,):
        raise DimensionMismatch("endpoint traces must have one entry per edge")
    inc = incidence(g)
    traces = np.concatenate([f0, f1])
    d = (inc.I_tilde.T @ traces) / np.diag(inc.D)
    residual = np.max(np.abs(inc.I_tilde @ d - traces))
    if residual > tol:
        raise NotContinuous(f"trace residual {residual:.3e} exceeds {tol:.1e}")
    return d


def ephaptic_incidence_tensor(inc: IncidenceSet) -> np.ndarray:
    """The signed endpoint-pairing tensor J[k, j, l, i] =
    I_plus[k, j] I_plus[l, i] - I_minus[k, j] I_minus[l, i]."""
    return (np.einsum("kj,li->kjli", inc.I_plus, inc.I_plus)
            - np.einsum("kj,li->kjli", inc.I_minus, inc.I_minus)).astype(float)


def one_sided_derivatives(u: StateVector) -> tuple[np.ndarray, np.ndarray]:
    """First-order one-sided derivatives at both edge endpoints, taken in
    the parametrization direction from the first interior grid point."""
    vals = u.grid_values()
    h = u.dof.h
    du0 = (vals[:, 1] - vals[:, 0]) / h
    du1 = (vals[:, -1] - vals[:, -2]) / h
    return du0, du1


def kirchhoff_residual(u: StateVector, sys: DiscreteSystem,
                       C: Optional[CouplingField] = None, M=None,
                       g: Optional[MetricGraph] = None) -> np.ndarray:
    """Per-node defect of the weighted flux balance.

    At node k this is the coefficient-weighted sum of one-sided derivatives
    of all edges, signed + at tails and - at heads (the contraction of the
    weighted endpoint-pairing tensor), minus (M d^u)_k.  Diagnostic only;
    it converges to zero for smooth solutions as the grid is refined.
    """
    C = sys.coupling if C is None else C
    M = sys.node_matrix if M is None else M
    g = sys.graph if g is None else g
    M = as_node_matrix(M, g.n_nodes)
    inc = sys.inc
    du0, du1 = one_sided_derivatives(u)
    C0 = C.evaluate(0.0)
    C1 = C.evaluate(1.0)
    flux = inc.I_plus @ (C0 @ du0) - inc.I_minus @ (C1 @ du1)
    return flux - M @ u.nodal_trace()


def export_matrix_market(system: DiscreteSystem, directory, prefix: str = "system") -> list[str]:
    """Write mass/stiffness/node_term/a_matrix in Matrix Market format."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, mat in [("mass", system.mass), ("stiffness", system.stiffness),
                      ("node_term", system.node_term), ("a_matrix", system.a_matrix)]:
        path = os.path.join(directory, f"{prefix}_{name}.mtx")
        scipy.io.mmwrite(path, sp.coo_matrix(mat))
        paths.append(path)
    return paths
