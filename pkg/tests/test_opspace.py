import numpy as np
import pytest

from qscocycles import numcore, opspace
from qscocycles.errors import AlreadyUnital, NotASystem, NotFullAlgebra, ShapeMismatch
from qscocycles.opspace import (adjoint_map, adjoint_space, amplify, choi, full_algebra, identity_map,
                                map_from_function, matrix_space, membership, operator_space, tilde_map,
                                tilde_system)
from qscocycles.semigroups import counterexample_family, evolve

E = lambda i, j, m=2: np.eye(m)[:, [i]] @ np.eye(m)[[j], :]


def test_full_algebra_flags():
    V = full_algebra(2)
    assert V.dim == 4 and V.is_system and V.is_full_algebra and V.is_adjoint_closed
    R = full_algebra(2, 3)
    assert R.dim == 6 and not R.is_system


def test_operator_space_detects_flags():
    S = operator_space([np.eye(2), [[0, 1], [1, 0]]])
    assert S.is_system and S.is_adjoint_closed and not S.is_full_algebra
    U = operator_space([[[0, 1], [0, 0]]])
    assert not U.is_adjoint_closed and not U.is_system
    with pytest.raises(ValueError):
        operator_space([np.eye(2), 2 * np.eye(2)])


def test_membership_examples():
    S = operator_space([np.eye(2), [[0, 1], [1, 0]]])
    ok, res = membership(S, [[0, 1], [1, 0]])
    assert ok and res < 1e-14
    ok, _ = membership(full_algebra(2), np.random.default_rng(0).standard_normal((2, 2)))
    assert ok
    ok, res = membership(S, [[0, 1], [0, 0]])
    assert not ok and res == pytest.approx(1 / np.sqrt(2))
    with pytest.raises(ShapeMismatch):
        membership(S, np.eye(3))


def test_coords_roundtrip_lifted():
    V = operator_space([np.eye(2), [[0, 1], [1, 0]], [[1, 0], [0, -1]]])
    W = matrix_space(V, 3)
    rng = np.random.default_rng(1)
    c = rng.standard_normal(W.dim) + 1j * rng.standard_normal(W.dim)
    assert np.allclose(W.coords(W.recon(c)), c)
    assert matrix_space(V, 3) is W
    assert matrix_space(V, 1) is V


def test_adjoint_space_and_map():
    S = operator_space([np.eye(2), [[0, 1], [1, 0]]])
    A = adjoint_space(S)
    assert all(membership(S, b)[0] for b in A.basis)
    V = full_algebra(2)
    idm = identity_map(V)
    assert np.allclose(adjoint_map(idm).coord_matrix, np.eye(4))
    X = np.array([[1, 2j], [0.5, -1]])
    phi = map_from_function(lambda T: X @ T, V)
    phid = adjoint_map(phi)
    rng = np.random.default_rng(2)
    for _ in range(5):
        T = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        assert np.allclose(phid(T.conj().T), phi(T).conj().T)
        S_ = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        assert np.allclose(phid(S_), S_ @ X.conj().T)


def test_tilde_system_examples():
    C = full_algebra(1)
    Tc = tilde_system(C)
    assert Tc.dim == 4 and Tc.is_full_algebra and Tc.is_system
    V = operator_space([[[1, 0, 0], [0, 1, 0]], [[0, 0, 1], [0, 0, 0]]])
    T = tilde_system(V)
    assert T.dim == 2 + 2 * V.dim
    ok, res = membership(T, np.eye(5))
    assert ok and res < 1e-14


def test_tilde_map_examples():
    V = full_algebra(2)
    assert np.allclose(tilde_map(identity_map(V)).coord_matrix, np.eye(10))
    phi = map_from_function(lambda a: a.T, V)
    assert np.allclose(tilde_map(phi)(np.eye(4)), np.eye(4))
    C = full_algebra(1)
    double = map_from_function(lambda a: 2 * a, C)
    out = tilde_map(double)(np.ones((2, 2)))
    assert np.allclose(out, [[1, 2], [2, 1]])
    assert not numcore.is_psd(out)


def test_amplify_examples():
    V = full_algebra(2)
    assert np.allclose(amplify(identity_map(V), 3).coord_matrix, np.eye(36))
    assert amplify(identity_map(V), 1).coord_matrix.shape == (4, 4)
    transpose = map_from_function(lambda a: a.T, V)
    omega = np.zeros(4)
    omega[[0, 3]] = 1 / np.sqrt(2)
    P = np.outer(omega, omega)
    out = amplify(transpose, 2)(P)
    assert numcore.min_eig(out) == pytest.approx(-0.5)
    phi = map_from_function(lambda a: np.array([[1, 2], [0, 1]]) @ a, V)
    a = np.array([[1, 1j], [2, 0]])
    A = np.kron(E(0, 0, 3), a)
    assert numcore.op_norm(amplify(phi, 3)(A)) == pytest.approx(numcore.op_norm(phi(a)))


def test_choi_examples():
    V = full_algebra(2)
    C = choi(identity_map(V))
    omega = np.array([1, 0, 0, 1])
    assert np.allclose(C, np.outer(omega, omega))
    assert numcore.is_psd(C)
    assert numcore.min_eig(choi(map_from_function(lambda a: a.T, V))) == pytest.approx(-1)
    dep = map_from_function(lambda a: np.trace(a) * np.eye(2) / 2, V)
    assert np.allclose(choi(dep), np.eye(4) / 2)
    with pytest.raises(NotFullAlgebra):
        choi(identity_map(operator_space([np.eye(2), [[0, 1], [1, 0]]])))


def test_sample_positive():
    rng = np.random.default_rng(3)
    S = operator_space([np.eye(2), [[0, 1], [1, 0]], [[0, -1j], [1j, 0]]])
    for n in (1, 2, 3):
        for boundary in (False, True):
            A = opspace.sample_positive(S, n, rng, boundary=boundary)
            assert numcore.is_psd(A)
            assert membership(matrix_space(S, n), A)[0]
    conds = [np.linalg.cond(opspace.sample_positive(full_algebra(2), 1, rng)) for _ in range(1000)]
    assert max(conds) > 10
    with pytest.raises(NotASystem):
        opspace.sample_positive(operator_space([[[0, 1], [0, 0]]]), 1, rng)


def test_schur_action_defect_examples():
    V = full_algebra(1)
    W = matrix_space(V, 2)
    phi = map_from_function(lambda a: 3 * a, V)
    assert opspace.schur_action_defect(amplify(phi, 2)) == 0
    L, _ = counterexample_family(0.5)
    assert opspace.schur_action_defect(evolve(L, 1.0)) > 0.1
    U = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    conj = map_from_function(lambda a: U @ a @ U.conj().T, W)
    assert opspace.schur_action_defect(conj, 2) > 0


def test_schur_action_linearity():
    V = full_algebra(2)
    theta = amplify(map_from_function(lambda a: a.T + np.trace(a) * np.eye(2), V), 2)
    assert opspace.schur_action_defect(theta) < 1e-14
    rng = np.random.default_rng(4)
    p = [opspace.block_projection(2, i, 2) for i in range(2)]
    for _ in range(100):
        A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        for i in range(2):
            for j in range(2):
                assert np.allclose(theta(p[i] @ A @ p[j]), p[i] @ theta(A) @ p[j])


def test_check_prop_F():
    rng = np.random.default_rng(5)
    V = full_algebra(2)
    ucp = map_from_function(lambda a: np.diag(np.diag(a)), V)
    v = opspace.check_prop_F(amplify(ucp, 2), rng)
    assert v.passed and v.witness["premises_hold"]
    L, _ = counterexample_family(0.5)
    P1 = evolve(L, 1.0)
    v = opspace.check_prop_F(P1, rng)
    assert v.passed and not v.witness["premises"]["fixes_projections"]
    assert np.allclose(np.diag(P1(np.diag([1.0, 0.0]))), [(1 + np.exp(-1)) / 2, (1 - np.exp(-1)) / 2])
    assert opspace.check_prop_F(identity_map(matrix_space(V, 2)), rng).passed


def test_ket_maps():
    K = opspace.ket_map_of_operator_family(np.eye(3))
    assert np.allclose(K.coord_matrix, np.eye(3))
    assert np.allclose(opspace.ket_map_of_operator_family(np.zeros((2, 2)))([[1], [2]]), 0)
    rng = np.random.default_rng(6)
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    phi = opspace.ket_map_of_operator_family(Q)
    for n in (1, 2, 3):
        for _ in range(10):
            A = opspace.sample_element(phi.domain, n, rng)
            assert numcore.op_norm(amplify(phi, n)(A)) == pytest.approx(1.0)


def test_unitise_and_extend():
    C = operator_space([[[0, 1], [0, 0]], [[0, 0], [1, 0]]])
    U = opspace.unitise(C)
    assert U.dim == C.dim + 1 and U.is_system
    with pytest.raises(AlreadyUnital):
        opspace.unitise(full_algebra(2))
    zero = opspace.SuperMap(C, C, np.zeros((2, 2)))
    ext = opspace.extend_cp(zero, 1.0)
    assert np.allclose(ext(np.eye(2)), np.eye(2))
    phi = map_from_function(lambda a: 0.5 * a, C)
    ext = opspace.extend_cp(phi, 0.5)
    a = np.array([[0, 2], [3j, 0]])
    assert np.allclose(ext(a), phi(a))


def test_cp_check_sampled_on_system():
    rng = np.random.default_rng(7)
    S = operator_space([np.eye(2), [[0, 1], [1, 0]], [[1, 0], [0, -1]]])
    assert opspace.check_cp_sampled(identity_map(S), rng).passed
    # doubling the sigma_x coordinate sends I + X outside the positive cone
    stretch = map_from_function(lambda a: a + a[0, 1].real * np.array([[0, 1], [1, 0]]), S)
    assert not opspace.check_cp_sampled(stretch, rng).passed


def test_choi_stable_under_amplification():
    rng = np.random.default_rng(10)
    V = full_algebra(2)
    for _ in range(20):
        C = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        phi = opspace.SuperMap(V, V, C)
        assert numcore.is_psd(choi(phi)) == numcore.is_psd(choi(amplify(phi, 2)))
    transpose = map_from_function(lambda a: a.T, V)
    assert not numcore.is_psd(choi(amplify(transpose, 2)))


def test_tilde_cp_agrees_with_complete_contractivity():
    # scalar maps on C are multiplication by z; the tilde map is CP iff |z| <= 1
    rng = np.random.default_rng(8)
    C = full_algebra(1)
    for _ in range(100):
        z = complex(*rng.uniform(-1.5, 1.5, size=2))
        phi = opspace.SuperMap(C, C, np.array([[z]]))
        cc = max(numcore.op_norm(amplify(phi, n)(opspace.sample_element(C, n, rng))) for n in (1, 2, 3)) <= 1 + 1e-9
        cp = opspace.check_cp_sampled(tilde_map(phi), rng, n_max=2, samples=10).passed
        assert cc == (abs(z) <= 1) == cp


def test_cp_maps_have_cb_norm_at_unit():
    rng = np.random.default_rng(9)
    V = full_algebra(2)
    for _ in range(20):
        K = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(2)]
        phi = map_from_function(lambda a: sum(k.conj().T @ a @ k for k in K), V)
        bound, _ = opspace.sampled_cb_norm(phi, rng, n_max=3, samples=10)
        assert bound <= numcore.op_norm(phi(np.eye(2))) * (1 + 1e-9)
        assert numcore.is_psd(choi(phi)) and numcore.is_psd(choi(amplify(phi, 2)))


def test_verdict_serialisation():
    wc = opspace.WorstCase(0.1)
    wc.update(0.05, {"a": np.array([1j])})
    wc.update(0.2, {"b": 1})
    v = wc.verdict()
    assert not v.passed and v.worst_violation == 0.2 and v.witness == {"b": 1}
    d = v.to_dict()
    assert d["passed"] is False and d["samples_used"] == 2
