"""Time stepping for the parabolic semigroup and the Schrödinger group on an
assembled system, with per-step observables.

All schemes are one-step implicit solves against the mass matrix:

    backward Euler    (Mass + dt A) u+      = Mass u
    Crank-Nicolson    (Mass + dt/2 A) u+    = (Mass - dt/2 A) u
    Schrödinger       (Mass + i dt/2 A) u+  = (Mass - i dt/2 A) u

The Schrödinger step is the Cayley transform, which is unitary in the mass
inner product whenever the system matrix is Hermitian.  Factorizations are
computed once per (matrix, dt) pair and reused across steps.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import DiscreteSystem, StateVector, kirchhoff_residual
from .errors import NotSelfAdjoint, SolverFailure

PARABOLIC_SCHEMES = ("backward_euler", "crank_nicolson")


def default_dt(h: float, scheme: str = "crank_nicolson") -> float:
    """Step size balancing temporal against spatial error: h^2/2 for
    backward Euler probes, h for Crank-Nicolson."""
    return 0.5 * h * h if scheme == "backward_euler" else h


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, total_dofs)
    observables: dict

    def state(self, k: int, sys: DiscreteSystem) -> StateVector:
        return StateVector(sys.dof, self.states[k])


class _Propagator:
    """One factorized implicit step u -> u+."""

    def __init__(self, sys: DiscreteSystem, dt: float, mode: str, scheme: str = "crank_nicolson"):
        mass = sys.mass.astype(complex)
        A = sys.a_matrix
        if mode == "schrodinger":
            lhs = mass + (0.5j * dt) * A
            self.rhs_mat = mass - (0.5j * dt) * A
        elif scheme == "backward_euler":
            lhs = mass + dt * A
            self.rhs_mat = mass
        elif scheme == "crank_nicolson":
            lhs = mass + (0.5 * dt) * A
            self.rhs_mat = mass - (0.5 * dt) * A
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        try:
            self.solver = spla.splu(sp.csc_matrix(lhs))
        except RuntimeError as exc:
            raise SolverFailure(f"factorization failed: {exc}") from exc

    def step(self, u: np.ndarray) -> np.ndarray:
        out = self.solver.solve(self.rhs_mat @ u)
        if not np.all(np.isfinite(out)):
            raise SolverFailure("non-finite values in linear solve")
        return out


def _time_grid(dt: float, T: float):
    """Constant steps of size dt, with one shorter final step landing on T."""
    if T < 0 or dt <= 0:
        raise SolverFailure(f"bad time parameters dt={dt}, T={T}")
    steps = []
    t = 0.0
    while t + dt <= T * (1 + 1e-12):
        steps.append(dt)
        t += dt
    if t < T - 1e-12 * max(T, 1.0):
        steps.append(T - t)
    return steps


def _observe(sys: DiscreteSystem, u: np.ndarray, obs: dict):
    state = StateVector(sys.dof, u)
    obs["l2_norm"].append(sys.mass_norm(u))
    obs["linf_norm"].append(float(np.max(np.abs(u))))
    obs["min_real"].append(float(np.min(u.real)))
    obs["energy"].append(sys.energy(u))
    obs["nodal_trace"].append(state.nodal_trace())
    obs["kirchhoff_residual_norm"].append(
        float(np.max(np.abs(kirchhoff_residual(state, sys))))
    )


def _simulate(sys: DiscreteSystem, u0, dt: float, T: float, mode: str,
              scheme: str, stride: int) -> Trajectory:
    u = u0.coefficients.copy() if isinstance(u0, StateVector) else np.asarray(u0, dtype=complex).copy()
    if u.shape != (sys.dof.total_dofs,):
        raise SolverFailure(f"initial state has wrong length {u.shape}")
    obs = {k: [] for k in ("l2_norm", "linf_norm", "min_real", "energy",
                           "nodal_trace", "kirchhoff_residual_norm")}
    times = [0.0]
    states = [u.copy()]
    _observe(sys, u, obs)
    props: dict[float, _Propagator] = {}
    t = 0.0
    for k, step_dt in enumerate(_time_grid(dt, T) if T > 0 else []):
        if step_dt not in props:
            props[step_dt] = _Propagator(sys, step_dt, mode, scheme)
        u = props[step_dt].step(u)
        t += step_dt
        if (k + 1) % stride == 0 or t >= T - 1e-15:
            times.append(t)
            states.append(u.copy())
            _observe(sys, u, obs)
    observables = {
        "l2_norm": np.array(obs["l2_norm"]),
        "linf_norm": np.array(obs["linf_norm"]),
        "min_real": np.array(obs["min_real"]),
        "energy": np.array(obs["energy"]),
        "nodal_trace": np.array(obs["nodal_trace"]),
        "kirchhoff_residual_norm": np.array(obs["kirchhoff_residual_norm"]),
    }
    return Trajectory(np.array(times), np.array(states), observables)


def simulate_parabolic(sys: DiscreteSystem, u0, dt: float, T: float,
                       scheme: str = "crank_nicolson", stride: int = 1) -> Trajectory:
    """Evolve the diffusion problem from u0 up to time T."""
    if scheme not in PARABOLIC_SCHEMES:
        raise ValueError(f"scheme must be one of {PARABOLIC_SCHEMES}")
    return _simulate(sys, u0, dt, T, "parabolic", scheme, stride)


def simulate_schrodinger(sys: DiscreteSystem, u0, dt: float, T: float,
                         stride: int = 1) -> Trajectory:
    """Evolve the Schrödinger problem with the unitary Cayley step.

    Requires a Hermitian system (Hermitian coupling samples and node matrix);
    the mass norm is then conserved to solver tolerance at every step.
    """
    if not sys.hermitian:
        raise NotSelfAdjoint("Schrödinger evolution needs a Hermitian system")
    return _simulate(sys, u0, dt, T, "schrodinger", "crank_nicolson", stride)


def propagate(sys: DiscreteSystem, u0: np.ndarray, dt: float, T: float,
              mode: str = "parabolic", scheme: str = "crank_nicolson") -> np.ndarray:
    """Final state at time T without recording observables."""
    if mode == "schrodinger" and not sys.hermitian:
        raise NotSelfAdjoint("Schrödinger evolution needs a Hermitian system")
    u = np.asarray(u0, dtype=complex).copy()
    props: dict[float, _Propagator] = {}
    for step_dt in _time_grid(dt, T) if T > 0 else []:
        if step_dt not in props:
            props[step_dt] = _Propagator(sys, step_dt, mode, scheme)
        u = props[step_dt].step(u)
    return u


def random_state(sys: DiscreteSystem, rng: np.random.Generator,
                 nonnegative: bool = False, complex_valued: bool = False) -> np.ndarray:
    """Random coefficient vector; continuity holds by construction since the
    DOF map shares node values."""
    n = sys.dof.total_dofs
    if nonnegative:
        return rng.uniform(0.0, 1.0, n).astype(complex)
    u = rng.standard_normal(n).astype(complex)
    if complex_valued:
        u = u + 1j * rng.standard_normal(n)
    return u


def concentrated_bump(sys: DiscreteSystem, edge: int) -> np.ndarray:
    """Nonnegative data supported on one edge's interior (zero at all nodes)."""
    dof = sys.dof
    u = np.zeros(dof.total_dofs, dtype=complex)
    xs = dof.grid[1:-1]
    for k, idx in enumerate(dof.edge_dofs[edge][1:-1]):
        u[idx] = np.sin(np.pi * xs[k])
    return u


def positivity_probe(sys: DiscreteSystem, trials: int, dt: float, T: float,
                     seed: int = 0, threshold: float = -1e-8) -> dict:
    """Run nonnegative initial data through the backward-Euler flow and report
    the most negative grid value seen over [0, T].

    Even trials use uniform random DOFs; odd trials use data concentrated on
    a single edge, which is where sign changes of the coupled flow show first.
    """
    rng = np.random.default_rng(seed)
    min_seen = 0.0
    for k in range(trials):
        if k % 2 == 0 or sys.dof.n_per_edge == 0:
            u0 = random_state(sys, rng, nonnegative=True)
        else:
            u0 = concentrated_bump(sys, int(rng.integers(sys.graph.n_edges)))
        traj = simulate_parabolic(sys, u0, dt, T, scheme="backward_euler")
        min_seen = min(min_seen, float(np.min(traj.observables["min_real"])))
    return {"min_value_seen": min_seen, "violated": bool(min_seen < threshold)}


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Delimited trajectory dump: one row per time, real/imag per DOF."""
    n = traj.states.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time"] + [f"dof_{k}_{p}" for k in range(n) for p in ("re", "im")])
        for t, state in zip(traj.times, traj.states):
            row = [repr(float(t))]
            for z in state:
                row.extend([repr(float(z.real)), repr(float(z.imag))])
            writer.writerow(row)


def write_observables_json(traj: Trajectory, path) -> None:
    records = []
    for k, t in enumerate(traj.times):
        records.append({
            "time": float(t),
            "l2_norm": float(traj.observables["l2_norm"][k]),
            "linf_norm": float(traj.observables["linf_norm"][k]),
            "min_real": float(traj.observables["min_real"][k]),
            "energy": [float(traj.observables["energy"][k].real),
                       float(traj.observables["energy"][k].imag)],
            "nodal_trace": [[float(z.real), float(z.imag)]
                            for z in traj.observables["nodal_trace"][k]],
            "kirchhoff_residual_norm": float(traj.observables["kirchhoff_residual_norm"][k]),
        })
    with open(path, "w") as fh:
        json.dump(records, fh, indent=2)
