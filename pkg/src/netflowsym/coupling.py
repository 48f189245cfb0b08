"""Edge-coupling coefficient field C(x), node matrix M, and the algebraic
well-posedness / qualitative-semigroup checks.

Entries of C may be constants, polynomials, or uniformly sampled values with
linear interpolation.  Continuous differentiability of the entries is the
caller's responsibility; it matters for the continuous theory, not for the
discrete assembly, and is not enforced here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NotConstant, OutOfDomain
from .graph import MetricGraph

_TOL = 1e-12

# Entry kinds: ("constant", z) | ("poly", ascending coeff array) | ("samples", value array)
Entry = tuple


def _normalize_entry(spec) -> Entry:
    if isinstance(spec, tuple) and len(spec) == 2 and spec[0] in ("constant", "poly", "samples"):
        kind, data = spec
        if kind == "constant":
            return ("constant", complex(data))
        arr = np.asarray(data, dtype=complex)
        if arr.ndim != 1 or arr.size < (1 if kind == "poly" else 2):
            raise DimensionMismatch(f"bad {kind} entry of shape {arr.shape}")
        return (kind, arr)
    if np.isscalar(spec) or isinstance(spec, complex):
        return ("constant", complex(spec))
    raise DimensionMismatch(f"cannot interpret coupling entry {spec!r}")


def _eval_entry(entry: Entry, xs: np.ndarray) -> np.ndarray:
    kind, data = entry
    if kind == "constant":
        return np.full(xs.shape, data, dtype=complex)
    if kind == "poly":
        # ascending coefficients c0 + c1 x + ...
        return np.polyval(data[::-1], xs)
    grid = np.linspace(0.0, 1.0, data.size)
    return np.interp(xs, grid, data.real) + 1j * np.interp(xs, grid, data.imag)


def _entry_is_zero(entry: Entry) -> bool:
    kind, data = entry
    if kind == "constant":
        return data == 0
    return bool(np.all(np.asarray(data) == 0))


class CouplingField:
    """The m-by-m matrix of scalar coefficient functions on [0, 1]."""

    def __init__(self, entries: Sequence[Sequence]):
        m = len(entries)
        if any(len(row) != m for row in entries):
            raise DimensionMismatch("coupling entries must form a square grid")
        self.m = m
        self.entries = [[_normalize_entry(e) for e in row] for row in entries]

    @classmethod
    def constant(cls, matrix) -> "CouplingField":
        mat = np.asarray(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"constant coupling must be square, got {mat.shape}")
        return cls([[("constant", mat[i, j]) for j in range(mat.shape[1])] for i in range(mat.shape[0])])

    @classmethod
    def identity(cls, m: int) -> "CouplingField":
        return cls.constant(np.eye(m))

    @classmethod
    def diagonal(cls, values) -> "CouplingField":
        return cls.constant(np.diag(np.asarray(values, dtype=complex)))

    @property
    def is_constant(self) -> bool:
        return all(e[0] == "constant" for row in self.entries for e in row)

    def evaluate(self, x: float) -> np.ndarray:
        """The matrix C(x) for a single x in [0, 1]."""
        return self.evaluate_many(np.array([float(x)]))[0]

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        """Stack of matrices C(x) for each x; shape (len(xs), m, m)."""
        xs = np.asarray(xs, dtype=float)
        if np.any(xs < -_TOL) or np.any(xs > 1 + _TOL):
            raise OutOfDomain(f"coupling evaluated outside [0, 1]: {xs.min()}..{xs.max()}")
        xs = np.clip(xs, 0.0, 1.0)
        out = np.empty((xs.size, self.m, self.m), dtype=complex)
        for i in range(self.m):
            for j in range(self.m):
                out[:, i, j] = _eval_entry(self.entries[i][j], xs)
        return out

    def entry_is_zero(self, i: int, j: int) -> bool:
        return _entry_is_zero(self.entries[i][j])


def evaluate(C: CouplingField, x: float) -> np.ndarray:
    """Evaluate the coefficient matrix at a point of [0, 1]."""
    return C.evaluate(x)


def default_sample_points(n_samples: int = 66) -> np.ndarray:
    """Uniform sample grid on [0, 1] including both endpoints."""
    if n_samples < 2:
        raise DimensionMismatch("need at least 2 sample points")
    return np.linspace(0.0, 1.0, n_samples)


def uniform_ellipticity(C: CouplingField, n_samples: int = 66) -> tuple[bool, float]:
    """Smallest eigenvalue of the Hermitian part of C(x) over a sample grid.

    Returns (flag, mu) with flag true iff mu > 0.
    """
    mats = C.evaluate_many(default_sample_points(n_samples))
    herm = 0.5 * (mats + np.conj(np.swapaxes(mats, 1, 2)))
    mu = float(np.min(np.linalg.eigvalsh(herm)))
    return mu > 0.0, mu


def gershgorin_wellposed(C: CouplingField) -> bool:
    """Row-diagonal-dominance criterion c_ii > sum_{j != i} |c_ij + c_ji| / 2.

    Only meaningful for constant C with real diagonal; a strict pass implies
    uniform ellipticity of the symmetrized matrix.
    """
    if not C.is_constant:
        raise NotConstant("criterion applies to constant coupling matrices only")
    mat = C.evaluate(0.0)
    for i in range(C.m):
        off = sum(abs(mat[i, j] + mat[j, i]) / 2 for j in range(C.m) if j != i)
        if not (mat[i, i].real > off):
            return False
    return True


@dataclass(frozen=True)
class WellPosednessReport:
    uniformly_elliptic: bool
    mu: float
    gershgorin_ok: Optional[bool]
    self_adjoint: bool
    real: bool
    positive: bool
    linf_contractive: bool
    l1_contractive: bool
    M_dissipative: bool
    M_negative_definite: bool
    strongly_stable: bool

    def to_dict(self) -> dict:
        return {
            "uniformly_elliptic": self.uniformly_elliptic,
            "mu": self.mu,
            "gershgorin_ok": self.gershgorin_ok,
            "self_adjoint": self.self_adjoint,
            "real": self.real,
            "positive": self.positive,
            "linf_contractive": self.linf_contractive,
            "l1_contractive": self.l1_contractive,
            "M_dissipative": self.M_dissipative,
            "M_negative_definite": self.M_negative_definite,
            "strongly_stable": self.strongly_stable,
        }


def as_node_matrix(M, n: int) -> np.ndarray:
    mat = np.asarray(M, dtype=complex)
    if mat.shape != (n, n):
        raise DimensionMismatch(f"node matrix must be {n}x{n}, got {mat.shape}")
    return mat


def classify_semigroup(
    C: CouplingField, M, g: MetricGraph, n_samples: int = 66
) -> WellPosednessReport:
    """Qualitative flags of the evolution generated by the form
    (Cf'|g') - (M d^f|d^g): reality, positivity, sup/1-norm contractivity,
    dissipativity, stability, self-adjointness.
    """
    if C.m != g.n_edges:
        raise DimensionMismatch(f"coupling is {C.m}x{C.m} but graph has {g.n_edges} edges")
    M = as_node_matrix(M, g.n_nodes)
    mats = C.evaluate_many(default_sample_points(n_samples))

    c_real = bool(np.max(np.abs(mats.imag)) <= _TOL)
    m_real = bool(np.max(np.abs(M.imag)) <= _TOL)
    real = c_real and m_real

    offdiag = mats.copy()
    idx = np.arange(C.m)
    offdiag[:, idx, idx] = 0.0
    c_diag_real = c_real and bool(np.max(np.abs(offdiag)) <= _TOL)

    m_off = M.copy()
    np.fill_diagonal(m_off, 0.0)
    positive = c_diag_real and m_real and bool(np.min(m_off.real) >= -_TOL)

    row_ok = np.all(M.real.diagonal() + np.abs(m_off).sum(axis=1) <= _TOL)
    col_ok = np.all(M.real.diagonal() + np.abs(m_off).sum(axis=0) <= _TOL)
    linf_contractive = c_diag_real and bool(row_ok)
    l1_contractive = c_diag_real and bool(col_ok)

    herm_M = 0.5 * (M + M.conj().T)
    lam_max = float(np.max(np.linalg.eigvalsh(herm_M)))
    m_dissipative = lam_max <= _TOL
    m_negdef = lam_max < -_TOL
    strongly_stable = m_dissipative and bool(
        np.linalg.norm(M.conj().T @ np.ones(g.n_nodes)) > _TOL
    )

    c_herm = bool(np.max(np.abs(mats - np.conj(np.swapaxes(mats, 1, 2)))) <= _TOL)
    self_adjoint = c_herm and bool(np.max(np.abs(M - M.conj().T)) <= _TOL)

    elliptic, mu = uniform_ellipticity(C, n_samples)
    gersh = None
    if C.is_constant:
        diag = C.evaluate(0.0).diagonal()
        if np.max(np.abs(diag.imag)) <= _TOL:
            gersh = gershgorin_wellposed(C)

    return WellPosednessReport(
        uniformly_elliptic=elliptic,
        mu=mu,
        gershgorin_ok=gersh,
        self_adjoint=self_adjoint,
        real=real,
        positive=positive,
        linf_contractive=linf_contractive,
        l1_contractive=l1_contractive,
        M_dissipative=m_dissipative,
        M_negative_definite=m_negdef,
        strongly_stable=strongly_stable,
    )
