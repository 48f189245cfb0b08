"""Strongly coupled diffusion and Schrödinger evolution on metric graphs.

The package builds directed metric graphs, assembles the energy form
(C f' | g') - (M d^f | d^g) with shared-node P1 elements, time-steps the
parabolic and Schrödinger flows, and decides - algebraically and
numerically - which pointwise edge-space symmetries the evolution preserves.
"""

from .assembly import (
    DiscreteSystem,
    DofMap,
    StateVector,
    assemble,
    build_dof_map,
    export_matrix_market,
    interpolate,
    kirchhoff_residual,
    nodal_vector,
)
from .coupling import (
    CouplingField,
    WellPosednessReport,
    classify_semigroup,
    gershgorin_wellposed,
    uniform_ellipticity,
)
from .evolution import (
    Trajectory,
    default_dt,
    positivity_probe,
    propagate,
    simulate_parabolic,
    simulate_schrodinger,
)
from .graph import (
    GraphClass,
    IncidenceSet,
    MetricGraph,
    build_graph,
    canonical_layer_numbering,
    classify,
    incidence,
    load_graph,
)
from .symmetry import (
    EdgeProjection,
    SymmetryReport,
    apply_projection,
    averaging_projection,
    averaging_shortcut,
    bipartite_alpha_check,
    brute_force_admissible,
    build_Mcal,
    check_C_orthogonal,
    check_M_orthogonal,
    check_admissible,
    check_one_eigenvector,
    continuity_violation,
    edge_projection,
    full_report,
    layer_projection,
    star_shortcut,
    subspace_projection,
    verify_invariance_numerically,
)

__version__ = "0.1.0"
