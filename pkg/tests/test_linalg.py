import numpy as np
import pytest

from qmeas.errors import DimensionError, NotPSDError, NumericError
from qmeas.linalg import (
    check_square,
    check_state,
    dagger,
    fidelity,
    haar_state,
    haar_states,
    haar_unitary,
    inverse_sqrt_psd,
    ket,
    principal_sqrt,
    projector,
    singular_values,
    svd,
)


def test_svd_reconstructs_random_matrix(rng):
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    res = svd(a)
    assert np.allclose(res.reconstruct(), a, atol=1e-12)
    assert np.all(np.diff(res.singulars) <= 0)
    assert np.allclose(dagger(res.left) @ res.left, np.eye(4), atol=1e-12)


def test_svd_of_diagonal_returns_sorted_values():
    res = svd(np.diag([0.2, 0.9, 0.5]))
    assert np.allclose(res.singulars, [0.9, 0.5, 0.2])


def test_svd_rejects_non_square():
    with pytest.raises(DimensionError):
        svd(np.zeros((2, 3)))


def test_svd_rejects_non_finite():
    with pytest.raises(NumericError):
        svd(np.array([[np.nan, 0], [0, 1]]))


def test_singular_values_on_stack(rng):
    stack = rng.standard_normal((5, 3, 3))
    vals = singular_values(stack)
    assert vals.shape == (5, 3)
    for m, v in zip(stack, vals):
        assert np.allclose(v, svd(m).singulars)


def test_principal_sqrt_squares_back(rng):
    g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    p = dagger(g) @ g
    root = principal_sqrt(p)
    assert np.allclose(root @ root, p, atol=1e-10)
    assert np.allclose(root, dagger(root))


def test_principal_sqrt_clips_rounding_noise():
    p = np.diag([1.0, -1e-13])
    assert np.allclose(principal_sqrt(p), np.diag([1.0, 0.0]))


def test_principal_sqrt_rejects_negative_eigenvalue():
    with pytest.raises(NotPSDError):
        principal_sqrt(np.diag([1.0, -0.1]))


def test_inverse_sqrt_psd():
    p = np.diag([4.0, 0.25])
    assert np.allclose(inverse_sqrt_psd(p), np.diag([0.5, 2.0]))
    with pytest.raises(NotPSDError):
        inverse_sqrt_psd(np.diag([1.0, 0.0]))


def test_haar_states_are_normalized(rng):
    psi = haar_states(3, 100, rng)
    assert psi.shape == (100, 3)
    assert np.allclose(np.linalg.norm(psi, axis=1), 1.0)


def test_haar_states_second_moment(rng):
    # E|<0|psi>|^4 = 2/(d(d+1))
    psi = haar_states(3, 200_000, rng)
    assert abs(np.mean(np.abs(psi[:, 0]) ** 4) - 1 / 6) < 3e-3


def test_haar_state_needs_dimension_two():
    with pytest.raises(DimensionError):
        haar_state(1)


def test_haar_unitary_is_unitary(rng):
    u = haar_unitary(4, rng)
    assert np.allclose(dagger(u) @ u, np.eye(4), atol=1e-12)
    assert haar_unitary(1, rng).shape == (1, 1)


def test_seeded_sampling_is_reproducible():
    assert np.array_equal(haar_states(2, 5, 7), haar_states(2, 5, 7))


def test_check_state():
    assert np.allclose(check_state([1, 0]), [1, 0])
    with pytest.raises(NumericError):
        check_state([1, 1])
    with pytest.raises(DimensionError):
        check_state([1, 0], dim=3)
    with pytest.raises(DimensionError):
        check_state(np.eye(2))


def test_check_square():
    with pytest.raises(DimensionError):
        check_square(np.zeros((0, 0)))


def test_ket_projector_fidelity():
    assert fidelity(ket(0, 2), ket(0, 2)) == 1.0
    assert fidelity(ket(0, 2), ket(1, 2)) == 0.0
    assert np.allclose(projector(1, 2), np.diag([0, 1]))
