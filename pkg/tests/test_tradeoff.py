import numpy as np
import pytest

from qmeas.catalog import family
from qmeas.errors import RangeError
from qmeas.info import InfoContents, info_contents, operation_fidelity, overall_fidelity
from qmeas.linalg import haar_unitary
from qmeas.measurement import Measurement, SingularTable, random_measurement, random_measurement_operators, singular_table
from qmeas.reversal import ReversalSingularTable, optimal_reversal_table
from qmeas.tradeoff import (
    InequalityReport,
    certify,
    check_dr,
    check_fidelity_chain,
    check_gd,
    check_gdr,
    check_gr,
    check_lemma1,
    check_lemma2,
    fidelity_chain,
    lemma1_equality_condition,
    region_label,
    rhs_gap_gdr_vs_gd,
    saturation_conditions,
    venn_flags,
    venn_implication_violations,
)


def info(name, p, dim=None):
    return info_contents(family(name, dim).build(p))


def unitary_info(d):
    return info_contents(Measurement([np.eye(d)]))


class TestGainDisturbance:
    def test_ex_ii_saturates(self):
        assert check_gd(info("ex_ii", 0.5)).saturated

    def test_main_text_is_strictly_inside(self):
        rep = check_gd(info("main_text", 0.6))
        assert rep.satisfied and not rep.saturated
        assert rep.lhs == pytest.approx(0.81156240333267020, abs=1e-14)

    @pytest.mark.parametrize("d", [2, 3, 4, 6])
    def test_von_neumann_saturates(self, d):
        rep = check_gd(info("vn_projective", 0, d))
        assert rep.saturated
        assert rep.lhs == pytest.approx(np.sqrt(1 / (d + 1)))

    def test_out_of_range_radicand(self):
        bad = InfoContents(gain=0.2, op_fidelity=0.9, disturbance=0.1, reversibility=0.5, dim=3)
        with pytest.raises(RangeError):
            check_gd(bad)

    def test_tiny_negative_radicand_is_clamped(self):
        edge = InfoContents(gain=0.5 + 1e-13, op_fidelity=0.5, disturbance=0.5, reversibility=0.0, dim=3)
        assert check_gd(edge).saturated


class TestGainReversibility:
    def test_ex_iv_saturates(self):
        assert check_gr(info("ex_iv", 0.5)).saturated

    def test_unitary_d3(self):
        rep = check_gr(unitary_info(3))
        assert rep.lhs == pytest.approx(6.0) and rep.rhs == 6.0 and rep.saturated

    def test_ex_v_not_saturated(self):
        rep = check_gr(info("ex_v", 0.5))
        assert rep.satisfied and not rep.saturated


class TestGlobalRelation:
    def test_main_text_saturates(self):
        assert check_gdr(info("main_text", 0.7)).saturated

    def test_ex_iii_saturates_global_but_not_gd(self):
        i = info("ex_iii", 0.5)
        assert check_gdr(i).saturated and not check_gd(i).saturated

    def test_ex_v_not_saturated(self):
        rep = check_gdr(info("ex_v", 0.5))
        assert rep.satisfied and not rep.saturated

    def test_coincides_with_gd_for_qubits(self, rng):
        for _ in range(30):
            i = info_contents(random_measurement(2, 3, rng))
            assert check_gdr(i).rhs == pytest.approx(check_gd(i).rhs, abs=1e-12)


class TestDisturbanceReversibility:
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_unitary_saturates(self, d):
        rep = check_dr(unitary_info(d))
        assert rep.lhs == pytest.approx(d - 1) and rep.saturated

    def test_von_neumann_saturates(self):
        rep = check_dr(info("vn_projective", 0, 4))
        assert rep.lhs == pytest.approx(3.0) and rep.saturated

    def test_ex_ii_inside(self):
        rep = check_dr(info("ex_ii", 0.5))
        assert rep.satisfied and rep.slack > 0.01


class TestLemmas:
    def test_unitary_with_identity_reversal(self):
        t = SingularTable(np.ones((1, 3)))
        rt = ReversalSingularTable(np.ones((1, 1, 3)))
        rep = check_lemma1(info_contents(t), overall_fidelity(t, rt), t, rt)
        assert rep.lhs == pytest.approx(4.0) and rep.saturated
        assert rep.equality_condition

    def test_qubit_weak_satisfied(self):
        t = singular_table(family("qubit_weak").build(0.5))
        rt = optimal_reversal_table(t)
        assert check_lemma1(info_contents(t), overall_fidelity(t, rt)).satisfied

    def test_von_neumann_hits_floor(self):
        t = singular_table(family("vn_projective").build(0))
        rt = optimal_reversal_table(t)
        assert check_lemma1(info_contents(t), overall_fidelity(t, rt)).saturated

    def test_equality_condition_tracks_saturation(self, rng):
        for _ in range(20):
            t = singular_table(random_measurement(3, 2, rng))
            rt = optimal_reversal_table(t)
            rep = check_lemma1(info_contents(t), overall_fidelity(t, rt), t, rt)
            assert rep.equality_condition == rep.saturated

    def test_main_text_equality_condition_fails(self):
        t = singular_table(family("main_text").build(0.6))
        assert not lemma1_equality_condition(t, optimal_reversal_table(t))

    def test_lemma2_trivial_reversal_is_equality(self):
        rep = check_lemma2(0.9, 0.9)
        assert rep.saturated and rep.slack == 0.0

    def test_lemma2_ex_ii_is_strict(self):
        t = singular_table(family("ex_ii").build(0.5))
        rep = check_lemma2(overall_fidelity(t, optimal_reversal_table(t)), operation_fidelity(t))
        assert rep.satisfied and rep.slack > 0.1

    def test_chain_is_non_increasing(self, rng):
        chain = [random_measurement(3, 2, rng) for _ in range(3)]
        f = fidelity_chain(chain)
        assert len(f) == 3
        assert np.all(np.diff(f) <= 1e-10)
        assert all(r.satisfied for r in check_fidelity_chain(chain))


class TestGap:
    def test_qubit_gap_vanishes(self, rng):
        for _ in range(20):
            assert abs(rhs_gap_gdr_vs_gd(info_contents(random_measurement(2, 2, rng)))) < 1e-12

    def test_main_text_gap(self):
        assert rhs_gap_gdr_vs_gd(info("main_text", 0.6)) == pytest.approx(0.022949526788029425, abs=1e-13)

    def test_equal_means_case_vanishes(self):
        # d = 3, G = 0.4 gives g = 1.8; R = (3 - g - R) / 1 at R = 0.6
        i = InfoContents(gain=0.4, op_fidelity=0.9, disturbance=0.1, reversibility=0.6, dim=3)
        assert abs(rhs_gap_gdr_vs_gd(i)) < 1e-15


class TestSaturationConditions:
    def test_von_neumann_in_all_sets(self):
        m = family("vn_projective").build(0)
        v = saturation_conditions(singular_table(m), m)
        assert (v.in_GDR, v.in_GD, v.in_GR, v.in_DR) == (True, True, True, True)
        assert v.region_label == "(i)"

    def test_ex_iii_only_global(self):
        m = family("ex_iii").build(0.5)
        v = saturation_conditions(singular_table(m), m)
        assert (v.in_GDR, v.in_GD, v.in_GR, v.in_DR) == (True, False, False, False)
        assert v.region_label == "(iii)"

    def test_ex_v_in_no_set(self):
        m = family("ex_v").build(0.5)
        v = saturation_conditions(singular_table(m), m)
        assert not any(v.memberships().values())
        assert v.region_label == "(v)"

    def test_gr_basis_strictness(self, rng):
        m = family("ex_iv").build(0.5)
        u = haar_unitary(3, rng)
        rotated = Measurement(np.array([u @ op @ u.conj().T for op in m.operators]))
        t = singular_table(rotated)
        assert saturation_conditions(t, rotated).in_GR
        assert not saturation_conditions(t, rotated, strict_basis=True).in_GR
        assert saturation_conditions(singular_table(m), m, strict_basis=True).in_GR

    def test_strict_mode_needs_operators(self):
        with pytest.raises(ValueError):
            saturation_conditions(singular_table(family("ex_iv").build(0.5)), strict_basis=True)

    def test_region_precedence(self):
        assert region_label(True, True, True, True) == "(i)"
        assert region_label(True, True, True, False) == "(ii)"
        assert region_label(True, False, False, False) == "(iii)"
        assert region_label(False, False, True, False) == "(iv)"
        assert region_label(False, False, False, False) == "(v)"

    def test_batched_flags_match_single(self, rng):
        ops = random_measurement_operators(3, 2, 20, rng)
        lam = np.linalg.svd(ops, compute_uv=False)
        flags = venn_flags(lam)
        for k in range(20):
            single = saturation_conditions(SingularTable(lam[k]))
            assert single.in_GD == flags["in_GD"][k]
            assert single.in_GR == flags["in_GR"][k]


def test_certify_batch(rng):
    lam = np.linalg.svd(random_measurement_operators(4, 3, 200, rng), compute_uv=False)
    res = certify(lam)
    for key in ("G-D", "G-R", "G-D-R", "D-R", "Lemma1", "Lemma2"):
        assert res[key].shape == (200,)
        assert np.min(res[key]) >= -1e-10
    assert np.min(res["gap"]) >= -1e-12
    assert venn_implication_violations(res["venn"]) == {"GD=>GDR&GR": 0, "GDR&GR=>GD": 0}


def test_report_string_mentions_status():
    rep = InequalityReport("G-R", 1.0, 0.5, -0.5, False, False)
    assert "VIOLATED" in str(rep)
