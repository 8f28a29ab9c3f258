import json

import numpy as np
import pytest

from qscocycles import verify
from qscocycles.errors import (DegenerateAction, NotASystem, PropertyNotApplicable, ShapeMismatch, UnitalInput,
                               ZeroEntryInZeta)
from qscocycles.kernels import CocycleKernel
from qscocycles.opspace import Verdict, full_algebra, operator_space
from qscocycles.semigroups import (AssociatedFamily, OperatorFamily, contraction_scaled, counterexample_family,
                                   dephasing_generator, global_generator, product_family, trivial_family,
                                   trivial_operator_family, weyl_scalar_family)
from qscocycles.verify import (Report, SampleSpec, dichotomy_scan, normalisation_defect, verify_cstar_interval,
                               verify_global_rank_one, verify_left_contraction, verify_prop_PP,
                               verify_theorem_Q, verify_theorem_R, verify_theorem_S, verify_theorem_W)

T3 = [0, 1, 1j]
SMALL = SampleSpec(n_max=3, trials=30, seed=1)


def dephasing():
    return product_family(dephasing_generator(), T3)


def transpose_family():
    # S_t = exp(t (transpose - id)) on Mat_2: unital and positive but not completely contractive
    V = full_algebra(2)
    P = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            P[j * 2 + i, i * 2 + j] = 1.0
    return AssociatedFamily(V, [0], {(0, 0): P - np.eye(4)}, label="transpose")


def cstar_corner():
    return operator_space([np.diag([1.0, 0.0])])


# SampleSpec and Report

def test_sample_spec_validation():
    with pytest.raises(ValueError):
        SampleSpec(n_max=0)
    with pytest.raises(ValueError):
        SampleSpec(trials=0)
    with pytest.raises(ValueError):
        SampleSpec(t_grid=(-1.0,))
    with pytest.raises(ValueError):
        SampleSpec(seed=-1)
    assert SampleSpec(t_grid=[0, 1]).positive_times() == (1.0,)


def test_sample_spec_streams_are_independent_and_reproducible():
    s = SampleSpec(seed=3)
    assert s.rng(1).integers(0, 10**9) == s.rng(1).integers(0, 10**9)
    assert s.rng(1).integers(0, 10**9) != s.rng(2).integers(0, 10**9)


def test_report_conclusions():
    r = Report("x")
    r.add("a", Verdict(True, 0.0))
    assert r.conclusion == "pass" and r.passed
    r.add("b", Verdict(True, 0.0, inconclusive=True))
    assert r.conclusion == "inconclusive"
    r.add("c", Verdict(False, 1.0, {"w": 1}))
    assert r.conclusion == "fail"
    assert r.check("c").witness == {"w": 1}
    with pytest.raises(KeyError):
        r.check("missing")
    d = json.loads(r.to_json())
    assert [c["label"] for c in d["checks"]] == ["a", "b", "c"]
    assert "FAIL" in r.summary()


# operator-system hypotheses and the kernel construction

def test_prop_PP_product_family_passes():
    rep = verify_prop_PP(dephasing(), SMALL)
    assert rep.passed, rep.summary()


def test_prop_PP_growth_fails_gram_bound():
    rep = verify_prop_PP(contraction_scaled(dephasing(), -1.0), SMALL)
    assert rep.check("positivity").passed
    assert not rep.check("gram-bound").passed
    assert rep.check("gram-bound").witness["min_eig"] < 0


def test_prop_PP_damped_family_is_not_unital_and_not_equal():
    rep = verify_prop_PP(contraction_scaled(dephasing(), 1.0), SMALL)
    assert rep.passed
    assert rep.check("unital-iff-equality").passed


def test_prop_PP_rejects_non_system():
    F = trivial_family(operator_space([[[0, 1], [0, 0]]]), [0, 1])
    with pytest.raises(NotASystem):
        verify_prop_PP(F, SMALL)


def test_theorem_Q_round_trip():
    rep = verify_theorem_Q(dephasing(), SMALL)
    assert rep.passed, rep.summary()
    labels = [label for label, _ in rep.checks]
    assert labels[:2] == ["hypothesis:positivity", "hypothesis:gram-bound"]
    assert "kernel:cocycle-identity" in labels


def test_theorem_Q_growth_stops_at_hypotheses():
    rep = verify_theorem_Q(contraction_scaled(dephasing(), -1.0), SMALL)
    assert not rep.check("hypothesis:gram-bound").passed
    assert rep.conclusion == "fail"
    with pytest.raises(KeyError):
        rep.check("kernel:contractivity")


# global semigroups

def test_theorem_R_product_family_passes():
    F = dephasing()
    rep = verify_theorem_R(global_generator(F), F.T, SMALL)
    assert rep.passed, rep.summary()
    assert rep.check("schur-action").passed and rep.check("unital").passed


def test_theorem_R_counterexample_fails_normalisation():
    G, meta = counterexample_family()
    rep = verify_theorem_R(G, meta["T"], SMALL)
    assert rep.check("complete-positivity").passed
    assert rep.check("contractivity").passed
    v = rep.check("normalisation")
    assert not v.passed
    assert v.witness["pair"] == [0, 0]
    assert rep.properties["schur_action_defect"]["1"] >= 0.1
    assert normalisation_defect(G, meta["T"], 1.0, 0, 0) >= 0.2


def test_theorem_R_shape_checks():
    G, _ = counterexample_family()
    with pytest.raises(ShapeMismatch):
        verify_theorem_R(G, T3, SMALL)


def test_global_rank_one():
    F = trivial_family(full_algebra(1), T3)
    rep = verify_global_rank_one(global_generator(F), F.T, [1, 2, -1j], SMALL)
    assert rep.passed, rep.summary()
    G, meta = counterexample_family()
    rep = verify_global_rank_one(G, meta["T"], [1, 1], SMALL)
    assert not rep.check("schur-action").passed
    with pytest.raises(ZeroEntryInZeta):
        verify_global_rank_one(global_generator(F), F.T, [1, 0, 1], SMALL)


# C*-algebra intervals

def test_cstar_interval_passes_for_trivial_family():
    F = trivial_family(cstar_corner(), T3)
    rep = verify_cstar_interval(F, SMALL)
    assert rep.passed, rep.summary()
    assert rep.properties["common_kernel_dim"] == 1


def test_cstar_interval_catches_growth():
    F = contraction_scaled(trivial_family(cstar_corner(), T3), -1.0)
    rep = verify_cstar_interval(F, SMALL)
    assert rep.check("interval-lower").passed
    assert not rep.check("interval-upper").passed
    assert rep.check("unitisation-agrees").passed


def test_cstar_interval_input_errors():
    with pytest.raises(UnitalInput):
        verify_cstar_interval(trivial_family(full_algebra(2), [0, 1]), SMALL)
    with pytest.raises(DegenerateAction):
        verify_cstar_interval(trivial_family(cstar_corner(), [0, 1]), SMALL, require_nondegenerate=True)


# complete contractivity

def test_theorem_S_trivial_and_product_pass():
    for F in (trivial_family(full_algebra(1), T3), dephasing()):
        rep = verify_theorem_S(F, SMALL)
        assert rep.passed, rep.summary()


def test_theorem_S_catches_growth_with_witness():
    rep = verify_theorem_S(contraction_scaled(trivial_family(full_algebra(1), T3), -1.0), SMALL)
    v = rep.check("norm-bound")
    assert not v.passed and v.witness["ratio"] > 1
    assert not rep.check("tilde-positivity").passed
    assert rep.check("criteria-agree").passed


def test_theorem_S_transpose_semigroup_is_not_cc():
    rep = verify_theorem_S(transpose_family(), SMALL)
    assert not rep.check("norm-bound").passed
    assert not rep.check("tilde-positivity").passed
    assert rep.check("criteria-agree").passed


def test_theorem_W_scalar_families():
    T = [0, 1, 1j]
    for c in (0.0, 0.5):
        rep = verify_theorem_W(contraction_scaled(trivial_operator_family(1, T), c), SMALL)
        assert rep.passed, rep.summary()
    rep = verify_theorem_W(contraction_scaled(trivial_operator_family(1, T), -0.5), SMALL)
    assert rep.check("commutativity").passed
    assert not rep.check("upper-bound").passed
    assert rep.check("upper-bound").witness["min_eig"] < 0


def test_theorem_W_non_commuting_family():
    rng = np.random.default_rng(0)
    gens = {(i, j): rng.standard_normal((2, 2)) for i in range(2) for j in range(2)}
    rep = verify_theorem_W(OperatorFamily(2, [0, 1], gens), SMALL)
    v = rep.check("commutativity")
    assert not v.passed and v.witness["commutator_norm"] >= 1e-3


def test_left_contraction():
    T = [0, 1, 1j]
    assert verify_left_contraction(weyl_scalar_family(0.5, T), SMALL).passed
    assert verify_left_contraction(contraction_scaled(trivial_operator_family(1, T), 0.5), SMALL).passed
    rep = verify_left_contraction(contraction_scaled(trivial_operator_family(1, T), -0.5), SMALL)
    assert not rep.passed
    assert rep.check("norm-bound").witness["ratio"] > 1


def test_falsification_is_monotone_in_growth():
    worst = []
    for c in (-0.1, -0.5, -1.0):
        rep = verify_theorem_S(contraction_scaled(trivial_family(full_algebra(1), T3), c), SMALL)
        worst.append(rep.check("norm-bound").worst_violation)
    assert 0 < worst[0] < worst[1] < worst[2]


# dichotomy

def test_dichotomy_map_kernels():
    spec = SampleSpec(trials=50)
    rep = dichotomy_scan(CocycleKernel(dephasing()), "unital", spec=spec)
    assert rep.passed and rep.properties["holds"]
    rep = dichotomy_scan(CocycleKernel(contraction_scaled(dephasing(), 1.0)), "unital", spec=spec)
    assert rep.passed and not rep.properties["holds"]
    rep = dichotomy_scan(CocycleKernel(dephasing()), "injective", spec=spec)
    assert rep.passed and rep.properties["holds"]


@pytest.mark.parametrize("prop", verify.WEYL_PROPERTIES)
def test_dichotomy_weyl(prop):
    rep = dichotomy_scan(weyl_scalar_family(0.5, [0, 1]), prop, spec=SampleSpec(trials=50))
    assert rep.passed and rep.properties["holds"]


def test_dichotomy_applicability():
    with pytest.raises(PropertyNotApplicable):
        dichotomy_scan(trivial_operator_family(1, [0, 1]), "isometric")
    with pytest.raises(PropertyNotApplicable):
        dichotomy_scan(CocycleKernel(dephasing()), "isometric")
    with pytest.raises(PropertyNotApplicable):
        dichotomy_scan(dephasing(), "unital")
    with pytest.raises(ValueError):
        dichotomy_scan(CocycleKernel(dephasing()), "unital", t_grid=(0.0,))


def test_reports_are_deterministic():
    a = verify_theorem_S(dephasing(), SMALL).to_json()
    b = verify_theorem_S(dephasing(), SMALL).to_json()
    assert a == b
    c = verify_theorem_S(dephasing(), SampleSpec(n_max=3, trials=30, seed=2)).to_json()
    assert a != c


def test_registry_lists_every_verifier():
    assert len(verify.REGISTRY) == 9
