import numpy as np
import pytest

from qmeas.catalog import all_families, family
from qmeas.errors import DimensionError, NumericError
from qmeas.info import info_contents, overall_fidelity
from qmeas.linalg import ket
from qmeas.measurement import Measurement, canonicalize, positive_frame, random_measurement, singular_table
from qmeas.oracle import (
    EXACT,
    MONTE_CARLO,
    OracleEstimate,
    exact_estimation_fidelity,
    exact_operation_fidelity,
    exact_overall_fidelity,
    exact_reversibility,
    mc_average,
    monte_carlo,
    schur_pair_average,
    schur_pair_average_two_copy,
    swap_operator,
)
from qmeas.reversal import ReversalOperation, optimal_reversal, optimal_reversal_table


def test_schur_pair_average_examples():
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    assert schur_pair_average(np.eye(2), np.eye(2)) == pytest.approx(1.0)
    assert schur_pair_average(p0, p0) == pytest.approx(1 / 3)
    assert schur_pair_average(p0, p1) == pytest.approx(1 / 6)
    with pytest.raises(DimensionError):
        schur_pair_average(np.eye(2), np.eye(3))


def test_schur_trace_formula_matches_two_copy_construction(rng):
    for d in range(2, 6):
        for _ in range(10):
            a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            b = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            a, b = a + a.conj().T, b + b.conj().T
            assert schur_pair_average(a, b) == pytest.approx(schur_pair_average_two_copy(a, b), abs=1e-12)


def test_swap_operator():
    s = swap_operator(3)
    v = np.kron(ket(0, 3), ket(2, 3))
    assert np.allclose(s @ v, np.kron(ket(2, 3), ket(0, 3)))
    assert np.allclose(s @ s, np.eye(9))


def test_estimation_fidelity_examples():
    for d in (2, 3):
        m = family("vn_projective", d).build(0)
        est = exact_estimation_fidelity(m, [ket(i, d) for i in range(d)])
        assert est.value == pytest.approx(2 / (d + 1))
        assert est.method == EXACT and est.samples == 0 and est.std_error == 0
    weak = family("qubit_weak").build(0.5)
    assert exact_estimation_fidelity(weak).value == pytest.approx(3.5 / 6, abs=1e-14)
    wrong = exact_estimation_fidelity(weak, [ket(0, 2), ket(1, 2)])
    assert wrong.value < 3.5 / 6 - 0.05


def test_estimate_shape_is_checked():
    with pytest.raises(DimensionError):
        exact_estimation_fidelity(family("qubit_weak").build(0.5), [ket(0, 2)])


def test_operation_fidelity_examples():
    m = family("ex_ii").build(0.5)
    assert exact_operation_fidelity(m).value == pytest.approx(0.97855339059327376, abs=1e-14)
    flip = np.diag([1.0, -1.0, 1.0])
    flipped = Measurement(np.array([flip @ op for op in m.operators]))
    assert exact_operation_fidelity(flipped).value == pytest.approx(0.34048220313557541, abs=1e-14)
    assert exact_operation_fidelity(Measurement([np.eye(3)])).value == pytest.approx(1.0)


def test_exact_oracles_match_closed_forms_on_catalog():
    for fam in all_families():
        for p in fam.grid(7):
            m = fam.build(p)
            t = singular_table(m)
            i = info_contents(t)
            rev = optimal_reversal(canonicalize(m))
            assert exact_estimation_fidelity(m).value == pytest.approx(i.gain, abs=1e-12)
            assert exact_operation_fidelity(positive_frame(m)).value == pytest.approx(i.op_fidelity, abs=1e-12)
            f_rm = overall_fidelity(t, optimal_reversal_table(t))
            assert exact_overall_fidelity(m, rev).value == pytest.approx(f_rm, abs=1e-12)
            assert exact_reversibility(m, rev).value == pytest.approx(i.reversibility, abs=1e-12)


def test_exact_oracles_match_closed_forms_on_random_measurements(random_measurements):
    for m in random_measurements:
        t = singular_table(m)
        i = info_contents(t)
        rev = optimal_reversal(canonicalize(m))
        assert exact_estimation_fidelity(m).value == pytest.approx(i.gain, abs=1e-12)
        assert exact_operation_fidelity(positive_frame(m)).value == pytest.approx(i.op_fidelity, abs=1e-12)
        assert exact_overall_fidelity(m, rev).value == pytest.approx(
            overall_fidelity(t, optimal_reversal_table(t)), abs=1e-12
        )
        assert exact_reversibility(m, rev).value == pytest.approx(i.reversibility, abs=1e-12)


def test_mc_gain_von_neumann():
    est = mc_average("gain", family("vn_projective", 2).build(0), n_samples=1_000_000, rng=11)
    assert est.method == MONTE_CARLO and est.samples == 1_000_000
    assert abs(est.value - 2 / 3) <= 3 * est.std_error


def test_mc_reversibility_is_deterministic_for_optimal_reversal():
    m = family("qubit_weak").build(0.36)
    est = mc_average("reversibility", m, optimal_reversal(canonicalize(m)), n_samples=10_000, rng=2)
    assert est.value == pytest.approx(0.64, abs=1e-12)
    assert est.variance < 1e-20


def test_mc_overall_fidelity_ex_ii():
    m = family("ex_ii").build(0.5)
    est = mc_average("overall_fidelity", m, optimal_reversal(canonicalize(m)), n_samples=200_000, rng=3)
    assert abs(est.value - 0.875) <= 3 * est.std_error


def test_mc_op_fidelity_uses_post_measurement_states():
    m = family("ex_iii").build(0.6)
    est = mc_average("op_fidelity", m, n_samples=200_000, rng=4)
    assert est.agrees_with(info_contents(m).op_fidelity)


def test_mc_argument_checks():
    m = family("qubit_weak").build(0.5)
    with pytest.raises(ValueError):
        mc_average("entropy", m)
    with pytest.raises(ValueError):
        mc_average("gain", m, n_samples=10)
    with pytest.raises(ValueError):
        mc_average("overall_fidelity", m, n_samples=1000)


def test_mc_flags_non_constant_optimal_success_probability():
    # mislabel a non-optimal reversal as optimal: success branch is not proportional to 1
    m = family("qubit_weak").build(0.5)
    bogus = ReversalOperation((np.eye(2)[None], np.eye(2)[None]), (1, 1), completion="principal_sqrt")
    with pytest.raises(NumericError):
        mc_average("reversibility", m, bogus, n_samples=1000, rng=1)


def test_monte_carlo_is_reproducible_and_splits_streams():
    def sampler(gen, size):
        return gen.random(size)

    a = monte_carlo(sampler, 10_000, rng=5, n_jobs=1)
    b = monte_carlo(sampler, 10_000, rng=5, n_jobs=1)
    c = monte_carlo(sampler, 10_000, rng=5, n_jobs=3)
    d = monte_carlo(sampler, 10_000, rng=5, n_jobs=3)
    assert a == b and c == d
    assert c.samples == 10_000
    assert abs(c.value - 0.5) < 5 * c.std_error


def test_chunked_statistics_match_numpy():
    data = np.random.default_rng(0).random(5000)
    pos = iter(range(0, 5000, 700))

    def sampler(gen, size):
        start = next(pos)
        return data[start : start + size]

    est = monte_carlo(sampler, 5000, rng=0, chunk=700)
    assert est.value == pytest.approx(data.mean())
    assert est.variance == pytest.approx(data.var(ddof=1))


def test_agreement_floor():
    assert OracleEstimate(0.5, 0.0, 10, MONTE_CARLO).agrees_with(0.5 + 1e-13)
    assert not OracleEstimate(0.5, 0.0, 10, MONTE_CARLO).agrees_with(0.5 + 1e-9)
