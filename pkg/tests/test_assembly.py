import numpy as np
import pytest
import scipy.io

import netflowsym as nf
from netflowsym.assembly import ephaptic_incidence_tensor, one_sided_derivatives
from netflowsym.errors import DiscontinuousAtNode, NotContinuous


def test_dof_counts(single, star2, cycle3):
    assert nf.build_dof_map(single, 0).total_dofs == 2
    assert nf.build_dof_map(star2, 1).total_dofs == 5  # 3 node + 2 interior
    assert nf.build_dof_map(cycle3, 3).total_dofs == 12


def test_dof_sharing(star2):
    dof = nf.build_dof_map(star2, 2)
    assert dof.edge_dofs[0][0] == dof.edge_dofs[1][0] == 0  # shared center
    referenced = {i for dofs in dof.edge_dofs for i in dofs}
    assert referenced == set(range(dof.total_dofs))


def test_single_edge_matrices(single):
    dof = nf.build_dof_map(single, 0)
    sys = nf.assemble(single, dof, nf.CouplingField.identity(1), np.zeros((2, 2)))
    assert np.allclose(sys.stiffness.toarray(), [[1, -1], [-1, 1]])
    assert np.allclose(sys.mass.toarray(), [[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
    assert sys.node_term.nnz == 0


def test_stiffness_block_structure(star2):
    # identity coupling: no cross-edge blocks, interaction only via node DOF
    dof = nf.build_dof_map(star2, 2)
    sys = nf.assemble(star2, dof, nf.CouplingField.identity(2), np.zeros((3, 3)))
    A = sys.stiffness.toarray()
    i0 = list(dof.edge_dofs[0][1:])
    i1 = list(dof.edge_dofs[1][1:])
    assert np.allclose(A[np.ix_(i0, i1)], 0)
    coupled = nf.assemble(star2, dof, nf.CouplingField.constant([[2, 1], [1, 2]]), np.zeros((3, 3)))
    assert not np.allclose(coupled.stiffness.toarray()[np.ix_(i0, i1)], 0)


def test_constant_in_kernel_when_M_zero(star2):
    dof = nf.build_dof_map(star2, 7)
    C = nf.CouplingField([[("poly", [1.0, 0.5]), 0.3], [0.3, ("samples", [1.0, 2.0, 1.5])]])
    sys = nf.assemble(star2, dof, C, np.zeros((3, 3)))
    one = np.ones(dof.total_dofs)
    assert np.max(np.abs(sys.a_matrix @ one)) < 1e-13
    assert np.max(np.abs(one @ sys.a_matrix.toarray())) < 1e-13


def test_hermitian_flag_and_symmetry(star2):
    dof = nf.build_dof_map(star2, 4)
    H = np.array([[2.0, 0.5 + 0.25j], [0.5 - 0.25j, 2.0]])
    M = np.array([[0, 1j, 0], [-1j, 0, 0], [0, 0, 0.0]])
    sys = nf.assemble(star2, dof, nf.CouplingField.constant(H), M)
    assert sys.hermitian
    A = sys.a_matrix
    assert np.max(np.abs((A - A.conj().T).toarray())) == 0.0
    skew = nf.assemble(star2, dof, nf.CouplingField.constant([[2, 1], [0, 2]]), M)
    assert not skew.hermitian


def test_coercivity_semidefinite(star2):
    dof = nf.build_dof_map(star2, 8)
    sys = nf.assemble(star2, dof, nf.CouplingField.constant([[2, 1], [1, 2]]), np.zeros((3, 3)))
    eigs = np.linalg.eigvalsh(sys.a_matrix.toarray())
    assert eigs.min() > -1e-10


def test_quadratic_form_consistency(single):
    # a(f, f) = pi^2/2 for f = cos(pi x) with unit coupling; P1 error is O(h^2)
    errs = []
    for npe in (7, 15, 31):
        dof = nf.build_dof_map(single, npe)
        sys = nf.assemble(single, dof, nf.CouplingField.identity(1), np.zeros((2, 2)))
        f = nf.interpolate(single, dof, [lambda x: np.cos(np.pi * x)])
        val = np.vdot(f.coefficients, sys.a_matrix @ f.coefficients).real
        errs.append(abs(val - np.pi**2 / 2))
    assert 3.0 < errs[0] / errs[1] < 5.0
    assert 3.0 < errs[1] / errs[2] < 5.0


def test_interpolate_constant(star2):
    dof = nf.build_dof_map(star2, 3)
    f = nf.interpolate(star2, dof, [lambda x: np.ones_like(x)] * 2)
    assert np.allclose(f.coefficients, 1.0)


def test_interpolate_discontinuous(star2):
    dof = nf.build_dof_map(star2, 3)
    with pytest.raises(DiscontinuousAtNode):
        nf.interpolate(star2, dof, [lambda x: x, lambda x: 1 - x])


def test_interpolate_traces(star2):
    dof = nf.build_dof_map(star2, 3)
    f = nf.interpolate(star2, dof, [lambda x: x, lambda x: x])
    assert np.allclose(f.nodal_trace(), [0, 1, 1])
    assert f.evaluate(0, 0.5) == pytest.approx(0.5)


def test_nodal_vector(star2, cycle3):
    assert np.allclose(nf.nodal_vector([1, 1], [1, 1], star2), [1, 1, 1])
    assert np.allclose(nf.nodal_vector([0, 0], [1, 2], star2), [0, 1, 2])
    with pytest.raises(NotContinuous):
        nf.nodal_vector([0, 1, 0], [1, 0, 1], cycle3)


def test_kirchhoff_constant_zero(star2):
    dof = nf.build_dof_map(star2, 5)
    sys = nf.assemble(star2, dof, nf.CouplingField.identity(2), np.zeros((3, 3)))
    u = nf.StateVector(dof, np.ones(dof.total_dofs))
    assert np.allclose(nf.kirchhoff_residual(u, sys), 0)


def test_kirchhoff_single_edge_sign(single):
    dof = nf.build_dof_map(single, 3)
    sys = nf.assemble(single, dof, nf.CouplingField.identity(1), np.zeros((2, 2)))
    u = nf.interpolate(single, dof, [lambda x: x])
    res = nf.kirchhoff_residual(u, sys)
    assert res[0] == pytest.approx(1.0)   # tail: + parametrization-direction flux
    assert res[1] == pytest.approx(-1.0)  # head


def test_kirchhoff_matches_dense_tensor(star2):
    # independent oracle: contract the full signed endpoint-pairing tensor
    dof = nf.build_dof_map(star2, 6)
    C = nf.CouplingField.constant([[2, 1], [0.5, 3]])
    M = np.array([[0.0, 1.0, 0], [0, -1, 0.5], [0, 0, 2.0]])
    sys = nf.assemble(star2, dof, C, M)
    rng = np.random.default_rng(5)
    u = nf.StateVector(dof, rng.standard_normal(dof.total_dofs).astype(complex))
    fast = nf.kirchhoff_residual(u, sys)

    inc = sys.inc
    J = ephaptic_incidence_tensor(inc)
    C0, C1 = C.evaluate(0.0), C.evaluate(1.0)
    du0, du1 = one_sided_derivatives(u)
    n, m = star2.n_nodes, star2.n_edges
    W = np.zeros((n, m, n, m), dtype=complex)
    for k in range(n):
        for j in range(m):
            for ell in range(n):
                for i in range(m):
                    cji = C0[j, i] if inc.I_plus[ell, i] else C1[j, i]
                    W[k, j, ell, i] = cji * J[k, j, ell, i]
    U = inc.I_plus.T * 0  # derivative of edge i at node ell, parametrization direction
    U = np.zeros((n, m), dtype=complex)
    for i in range(m):
        U[star2.tails[i], i] = du0[i]
        U[star2.heads[i], i] = du1[i]
    slow = np.einsum("kjli,li->k", W, U) - M @ u.nodal_trace()
    assert np.allclose(fast, slow)


def test_kirchhoff_residual_refines(single):
    # steady-state of the Robin-type problem: residual shrinks with h
    prev = None
    for npe in (7, 15, 31, 63):
        dof = nf.build_dof_map(single, npe)
        sys = nf.assemble(single, dof, nf.CouplingField.identity(1), -np.eye(2))
        u0 = nf.interpolate(single, dof, [lambda x: 1 + 0.3 * np.cos(np.pi * x)])
        traj = nf.simulate_parabolic(sys, u0, 0.01, 1.0)
        res = float(traj.observables["kirchhoff_residual_norm"][-1])
        if prev is not None:
            assert res < prev
        prev = res


def test_matrix_market_export(tmp_path, star2):
    dof = nf.build_dof_map(star2, 2)
    sys = nf.assemble(star2, dof, nf.CouplingField.identity(2), np.zeros((3, 3)))
    paths = nf.export_matrix_market(sys, tmp_path, prefix="s")
    assert len(paths) == 4
    back = scipy.io.mmread(paths[0])
    assert np.allclose(back.toarray(), sys.mass.toarray())
