"""Figure rendering for trajectory output (written next to the CSV files)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .assembly import DiscreteSystem
from .evolution import Trajectory


def render_trajectory_figures(traj: Trajectory, sys: DiscreteSystem, prefix: str) -> list[str]:
    """Write an observables plot and an initial/final state plot as PNGs."""
    paths = []

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.4))
    t = traj.times
    axes[0].plot(t, traj.observables["l2_norm"], label=r"$\|u\|_{L^2}$")
    axes[0].plot(t, traj.observables["linf_norm"], label=r"$\|u\|_{\infty}$", ls="--")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("norm")
    axes[0].legend(fontsize=8)
    axes[1].plot(t, traj.observables["min_real"], color="tab:red")
    axes[1].axhline(0.0, color="k", lw=0.6)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("min Re u on grid")
    fig.tight_layout()
    p = f"{prefix}_observables.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)

    dof = sys.dof
    grid = dof.grid
    fig, ax = plt.subplots(figsize=(6, 3.4))
    for j in range(sys.graph.n_edges):
        idx = list(dof.edge_dofs[j])
        ax.plot(grid, traj.states[0][idx].real, color=f"C{j % 10}", ls=":",
                label=f"edge {j} (t=0)")
        ax.plot(grid, traj.states[-1][idx].real, color=f"C{j % 10}",
                label=f"edge {j} (t=T)")
    ax.set_xlabel("x")
    ax.set_ylabel("Re u")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    p = f"{prefix}_state.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)
    return paths
