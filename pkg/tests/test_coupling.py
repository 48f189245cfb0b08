import numpy as np
import pytest

import netflowsym as nf
from netflowsym.coupling import evaluate
from netflowsym.errors import DimensionMismatch, NotConstant, OutOfDomain


def test_evaluate_constant():
    C = nf.CouplingField.constant([[2, 1], [0.5, 2]])
    assert np.allclose(C.evaluate(0.3), [[2, 1], [0.5, 2]])


def test_evaluate_poly_and_samples():
    C = nf.CouplingField([[("poly", [0.0, 1.0])]])  # c(x) = x
    assert evaluate(C, 0.5)[0, 0] == pytest.approx(0.5)
    C = nf.CouplingField([[("samples", [1.0, 3.0])]])
    assert evaluate(C, 0.5)[0, 0] == pytest.approx(2.0)


def test_evaluate_out_of_domain():
    C = nf.CouplingField.identity(1)
    with pytest.raises(OutOfDomain):
        C.evaluate(1.5)


def test_ellipticity_identity():
    flag, mu = nf.uniform_ellipticity(nf.CouplingField.identity(2))
    assert flag and mu == pytest.approx(1.0)


def test_ellipticity_nonsymmetric():
    # Hermitian part [[2, .75], [.75, 2]] has eigenvalues 1.25 and 2.75
    flag, mu = nf.uniform_ellipticity(nf.CouplingField.constant([[2, 1], [0.5, 2]]))
    assert flag and mu == pytest.approx(1.25)


def test_ellipticity_rank_one_coupling_fails():
    # all-equal entries: Hermitian part has eigenvalue 0
    flag, mu = nf.uniform_ellipticity(nf.CouplingField.constant([[3, 3], [3, 3]]))
    assert not flag
    assert mu == pytest.approx(0.0, abs=1e-12)


def test_gershgorin():
    assert nf.gershgorin_wellposed(nf.CouplingField.constant([[2, 1], [0.5, 2]]))
    assert nf.gershgorin_wellposed(nf.CouplingField.identity(2))
    assert not nf.gershgorin_wellposed(nf.CouplingField.constant([[1, 2], [2, 1]]))
    with pytest.raises(NotConstant):
        nf.gershgorin_wellposed(nf.CouplingField([[("poly", [1.0, 1.0])]]))


def test_gershgorin_implies_elliptic():
    rng = np.random.default_rng(1)
    for _ in range(30):
        m = int(rng.integers(2, 5))
        A = rng.standard_normal((m, m))
        A += np.diag(np.abs(A).sum(axis=1) + rng.uniform(0.1, 1.0, m))
        C = nf.CouplingField.constant(A)
        if nf.gershgorin_wellposed(C):
            assert nf.uniform_ellipticity(C)[0]


def test_classify_identity_zero(star2_graph=None):
    g = nf.build_graph([(0, 1), (0, 2)])
    rep = nf.classify_semigroup(nf.CouplingField.identity(2), np.zeros((3, 3)), g)
    assert rep.real and rep.positive and rep.linf_contractive and rep.l1_contractive
    assert rep.M_dissipative and not rep.M_negative_definite
    assert not rep.strongly_stable  # M* 1 = 0
    assert rep.self_adjoint and rep.uniformly_elliptic


def test_classify_negative_definite():
    g = nf.build_graph([(0, 1), (0, 2)])
    rep = nf.classify_semigroup(nf.CouplingField.identity(2), -np.eye(3), g)
    assert rep.M_negative_definite and rep.M_dissipative and rep.strongly_stable


def test_classify_nondiagonal_coupling_not_positive():
    g = nf.build_graph([(0, 1), (0, 2)])
    rep = nf.classify_semigroup(nf.CouplingField.constant([[2, 1], [1, 2]]), np.zeros((3, 3)), g)
    assert rep.real and not rep.positive
    assert not rep.linf_contractive


def test_classify_dimension_mismatch():
    g = nf.build_graph([(0, 1), (0, 2)])
    with pytest.raises(DimensionMismatch):
        nf.classify_semigroup(nf.CouplingField.identity(3), np.zeros((3, 3)), g)
    with pytest.raises(DimensionMismatch):
        nf.classify_semigroup(nf.CouplingField.identity(2), np.zeros((2, 2)), g)


def test_positive_implies_real_randomized():
    g = nf.build_graph([(0, 1), (0, 2)])
    rng = np.random.default_rng(7)
    for _ in range(40):
        diag = rng.uniform(0.5, 2.0, 2)
        C = nf.CouplingField.diagonal(diag if rng.random() < 0.7 else diag + 1j * rng.standard_normal(2))
        M = rng.standard_normal((3, 3))
        if rng.random() < 0.5:
            M = M + 1j * rng.standard_normal((3, 3))
        rep = nf.classify_semigroup(C, M, g)
        if rep.positive:
            assert rep.real
        if rep.M_negative_definite:
            assert rep.M_dissipative


def test_self_adjoint_flag_unitary_invariance():
    g = nf.build_graph([(0, 1), (0, 2)])
    rng = np.random.default_rng(3)
    H = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    H = H + H.conj().T + 4 * np.eye(2)
    M = np.zeros((3, 3))
    base = nf.classify_semigroup(nf.CouplingField.constant(H), M, g).self_adjoint
    assert base
    Q, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    rotated = nf.classify_semigroup(nf.CouplingField.constant(Q @ H @ Q.conj().T), M, g)
    assert rotated.self_adjoint == base


def test_linf_flag_row_violation():
    g = nf.build_graph([(0, 1), (0, 2)])
    M = np.array([[0.5, 0, 0], [0, -1, 0], [0, 0, -1]])  # row 0 violates
    rep = nf.classify_semigroup(nf.CouplingField.diagonal([1.0, 1.0]), M, g)
    assert not rep.linf_contractive
