import numpy as np
import pytest

from qscocycles import numcore, opspace, semigroups
from qscocycles.errors import IndexNotInT, NegativeTime, NotUnitalCP, ShapeMismatch, ValueNotInT
from qscocycles.opspace import full_algebra, matrix_space
from qscocycles.semigroups import (Generator, contraction_scaled, counterexample_family, dephasing_generator,
                                   evolve, global_generator, global_semigroup, ket_family, product_family,
                                   schur_tuple, tilde_family, trivial_family, trivial_operator_family,
                                   weyl_scalar_family)

T3 = [0, 1, 1j]


def test_evolve_zero_time_is_identity():
    L = dephasing_generator()
    assert np.allclose(evolve(L, 0.0).coord_matrix, np.eye(4))
    with pytest.raises(NegativeTime):
        evolve(L, -0.1)


def test_dephasing_closed_form():
    # sigma_z a sigma_z - a kills the diagonal and doubles-damps the off-diagonal
    L = dephasing_generator()
    a = np.array([[1, 2], [3, 4]], dtype=complex)
    out = evolve(L, 0.5)(a)
    assert np.allclose(out, [[1, 2 * np.exp(-1)], [3 * np.exp(-1), 4]], atol=1e-14)


def test_index_set_validation():
    V = full_algebra(1)
    with pytest.raises(ValueError):
        trivial_family(V, [1, 0])
    with pytest.raises(ValueError):
        trivial_family(V, [0, 1, 1])


def test_semigroup_law_on_grid():
    F = product_family(dephasing_generator(), T3)
    grid = (0.0, 0.25, 0.5, 1.0)
    for i in range(3):
        for j in range(3):
            for s in grid:
                for t in grid:
                    lhs = F.semigroup_coords(i, j, s + t)
                    rhs = F.semigroup_coords(i, j, s) @ F.semigroup_coords(i, j, t)
                    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_trivial_family_values():
    F = trivial_family(full_algebra(2), [0, 1])
    a = np.array([[1, 2j], [0, -1]])
    assert np.allclose(F.semigroup(0, 1, 1.0)(a), np.exp(-0.5) * a)
    assert np.allclose(F.semigroup(1, 1, 3.0)(a), a)


def test_product_family_values():
    F = product_family(dephasing_generator(), T3)
    a = np.array([[1, 1], [1, 1]], dtype=complex)
    # chi(1, i) = 1 - i
    expected = np.exp(-(1 - 1j)) * evolve(dephasing_generator(), 1.0)(a)
    assert np.allclose(F.semigroup(1, 2, 1.0)(a), expected)


def test_product_family_rejects_non_unital():
    L = Generator(full_algebra(2), -np.eye(4))
    with pytest.raises(NotUnitalCP):
        product_family(L, [0, 1])


def test_index_errors():
    F = trivial_family(full_algebra(1), [0, 1])
    with pytest.raises(IndexNotInT):
        F.semigroup(0, 2, 1.0)
    with pytest.raises(IndexNotInT):
        F.semigroup(-1, 0, 1.0)
    with pytest.raises(ValueNotInT):
        F.index_of([2.0])
    assert F.index_of([1.0]) == 1
    with pytest.raises(NegativeTime):
        F.semigroup(0, 0, -1.0)


def test_tilde_corner_decay():
    F = trivial_family(full_algebra(1), [0, 1])
    tF = tilde_family(F)
    C = tF.semigroup_coords(0, 1, 1.0)
    assert C[0, 0] == pytest.approx(np.exp(-0.5), abs=1e-14)
    assert C[1, 1] == pytest.approx(np.exp(-0.5), abs=1e-14)
    assert tF.space.is_system


def test_tilde_lower_left_is_adjoint_component():
    F = product_family(dephasing_generator(), T3)
    tF = tilde_family(F)
    k = F.space.dim
    C = tF.semigroup_coords(1, 2, 0.7)
    assert np.allclose(C[2:2 + k, 2:2 + k], F.semigroup_coords(1, 2, 0.7))
    assert np.allclose(C[2 + k:, 2 + k:], np.conj(F.semigroup_coords(2, 1, 0.7)))


@pytest.mark.parametrize("c", [0.5, 1.0])
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_counterexample_closed_forms(c, t):
    G, meta = counterexample_family(c)
    Pt = evolve(G, t)
    box_expected = np.array([[1, np.exp(-c * t)], [np.exp(-c * t), 1]])
    assert np.max(np.abs(Pt(np.ones((2, 2))) - box_expected)) <= 1e-10
    p = np.exp(-2 * c * t)
    assert np.max(np.abs(Pt(np.diag([1.0, 0.0])) - np.diag([(1 + p) / 2, (1 - p) / 2]))) <= 1e-10
    assert np.allclose(meta["box_image"](t), box_expected)


def test_counterexample_is_unital_cp_without_schur_action():
    G, _ = counterexample_family()
    assert semigroups.is_unital_cp_generator(G)
    assert opspace.schur_action_defect(evolve(G, 1.0), 2) >= 0.1


def test_schur_tuple_and_global_semigroup():
    F = product_family(dephasing_generator(), T3)
    x = [2, 0]
    P = schur_tuple(F, x, 0.8)
    rng = np.random.default_rng(0)
    A = opspace.sample_element(F.space, 2, rng)
    out = P(A)
    for a in range(2):
        for b in range(2):
            blk = A[2 * a:2 * a + 2, 2 * b:2 * b + 2]
            assert np.allclose(out[2 * a:2 * a + 2, 2 * b:2 * b + 2], F.semigroup(x[a], x[b], 0.8)(blk))
    assert np.allclose(global_semigroup(F, x, 0.8).coord_matrix, P.coord_matrix)


def test_global_generator_matches_global_semigroup():
    F = product_family(dephasing_generator(), T3)
    G = global_generator(F)
    assert G.space.dim == matrix_space(F.space, 3).dim
    for t in (0.3, 1.1):
        assert np.allclose(evolve(G, t).coord_matrix, global_semigroup(F, [0, 1, 2], t).coord_matrix, atol=1e-12)


def test_global_semigroup_diagonal_blocks_are_components():
    F = trivial_family(full_algebra(1), T3)
    out = global_semigroup(F, [0, 1, 2], 1.0)(np.ones((3, 3)))
    assert np.allclose(out, numcore.gram_matrix(F.T, 1.0))


def test_contraction_scaled_both_kinds():
    F = trivial_family(full_algebra(1), [0, 1])
    G = contraction_scaled(F, 1.0)
    assert G.semigroup_coords(0, 0, 2.0)[0, 0] == pytest.approx(np.exp(-2))
    O = contraction_scaled(trivial_operator_family(2, [0, 1]), -0.5)
    assert np.allclose(O.op(0, 1, 1.0), np.exp(-0.5 + 0.5) * np.eye(2))


@pytest.mark.parametrize("c", [0.0, 0.5, -0.5, 1 + 1j])
def test_weyl_vacuum_component(c):
    F = weyl_scalar_family(c, [0, 1])
    for t in (0.5, 1.0, 2.0):
        assert abs(F.op(0, 0, t)[0, 0]) == pytest.approx(np.exp(-t * abs(c) ** 2 / 2), abs=1e-14)


def test_weyl_family_rejects_wrong_dimension():
    with pytest.raises(ShapeMismatch):
        weyl_scalar_family([1, 2], [0, 1])


def test_weyl_c_zero_is_trivial():
    W = weyl_scalar_family(0.0, T3)
    O = trivial_operator_family(1, T3)
    for i in range(3):
        for j in range(3):
            assert np.allclose(W.op(i, j, 0.9), O.op(i, j, 0.9))


def test_operator_block_layout():
    F = trivial_operator_family(2, [0, 1])
    B = F.block([0, 1], 1.0)
    assert np.allclose(B, np.kron(numcore.gram_matrix(F.T, 1.0), np.eye(2)))


def test_ket_family_acts_by_multiplication():
    F = weyl_scalar_family(0.5, [0, 1])
    K = ket_family(F)
    u = np.array([[2.0 - 1j]])
    assert np.allclose(K.semigroup(1, 0, 1.0)(u), F.op(1, 0, 1.0) @ u)


def test_memo_reuses_exponentials():
    F = trivial_family(full_algebra(1), [0, 1])
    F.semigroup_coords(0, 1, 1.0)
    F.semigroup_coords(0, 1, 1.0)
    assert len(F._memo) == 1
