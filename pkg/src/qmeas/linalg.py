"""Dense complex linear algebra for small Hilbert spaces.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` and states are
1-D complex arrays. The helpers here validate inputs, decompose operators
and draw Haar-random states and unitaries from an explicitly passed
``numpy.random.Generator``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

from .errors import DimensionError, NotPSDError, NumericError

RECONSTRUCTION_TOL = 1e-10


class SvdResult(NamedTuple):
    """Singular value decomposition ``m = left @ diag(singulars) @ right_adjoint``."""

    left: np.ndarray
    singulars: np.ndarray
    right_adjoint: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singulars) @ self.right_adjoint


def as_rng(rng=None) -> np.random.Generator:
    """Turn a seed, ``None`` or a generator into a ``numpy.random.Generator``."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def check_square(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite square complex array, or raise.

    Parameters
    ----------
    m : array_like
        Candidate matrix.
    name : str
        Used in error messages.

    Returns
    -------
    numpy.ndarray
        ``complex128`` copy-free view when possible.
    """
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} has non-finite entries")
    return arr


def check_state(psi, dim: int | None = None, tol: float = 1e-10) -> np.ndarray:
    """Validate a normalized state vector (optionally of dimension ``dim``)."""
    arr = np.asarray(psi, dtype=np.complex128)
    if arr.ndim != 1:
        raise DimensionError(f"state must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"state has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise NumericError("state has non-finite amplitudes")
    norm = np.linalg.norm(arr)
    if abs(norm - 1.0) > tol:
        raise NumericError(f"state is not normalized (norm {norm:.3e})")
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def svd(m, tol: float = RECONSTRUCTION_TOL) -> SvdResult:
    """Singular value decomposition of a square matrix.

    Singular values come back in decreasing order. Equal singular values keep
    the order LAPACK returns, which is deterministic for a fixed input; all
    downstream quantities depend only on the multiset.

    Raises
    ------
    DimensionError
        If ``m`` is not square.
    NumericError
        If neither LAPACK driver converges, or the reconstruction residual
        exceeds ``tol`` (scaled by ``max(1, ||m||_F)``).
    """
    arr = check_square(m)
    try:
        u, s, vh = np.linalg.svd(arr)
    except np.linalg.LinAlgError:
        try:
            u, s, vh = scipy.linalg.svd(arr, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"SVD did not converge for {arr.shape} matrix: {exc}") from exc
    result = SvdResult(u, s, vh)
    residual = np.linalg.norm(result.reconstruct() - arr)
    if residual > tol * max(1.0, np.linalg.norm(arr)):
        raise NumericError(f"SVD reconstruction residual {residual:.3e} exceeds {tol:.1e}")
    return result


def singular_values(m) -> np.ndarray:
    """Singular values in decreasing order; works on stacks ``(..., d, d)``."""
    return np.linalg.svd(np.asarray(m, dtype=np.complex128), compute_uv=False)


def principal_sqrt(p, tol: float = 1e-10) -> np.ndarray:
    """Hermitian PSD square root of a PSD matrix.

    Eigenvalues in ``[-tol, 0)`` are treated as rounding noise and clipped.
    """
    arr = check_square(p)
    herm = 0.5 * (arr + dagger(arr))
    w, v = np.linalg.eigh(herm)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w[0] < -tol * scale:
        raise NotPSDError(f"matrix has eigenvalue {w[0]:.3e} below -{tol:.1e}")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ dagger(v)
    return root


def inverse_sqrt_psd(p: np.ndarray) -> np.ndarray:
    """``p^(-1/2)`` for a stack of positive definite Hermitian matrices."""
    w, v = np.linalg.eigh(p)
    if np.any(w <= 0):
        raise NotPSDError("matrix is singular or not positive definite")
    return (v / np.sqrt(w)[..., None, :]) @ dagger(v)


def haar_state(d: int, rng=None) -> np.ndarray:
    """One Haar-random pure state of dimension ``d``."""
    return haar_states(d, 1, rng)[0]


def haar_states(d: int, size: int, rng=None) -> np.ndarray:
    """``size`` Haar-random pure states stacked as rows, shape ``(size, d)``.

    Normalized complex Gaussian vectors; the distribution is invariant under
    every fixed unitary.
    """
    if d < 2:
        raise DimensionError(f"Hilbert dimension must be at least 2, got {d}")
    gen = as_rng(rng)
    z = gen.standard_normal((size, 2 * d)).view(np.complex128)
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z


def haar_unitary(d: int, rng=None) -> np.ndarray:
    """Haar-random unitary of dimension ``d``."""
    if d < 1:
        raise DimensionError(f"dimension must be positive, got {d}")
    if d == 1:
        phase = as_rng(rng).uniform(0, 2 * np.pi)
        return np.array([[np.exp(1j * phase)]])
    return unitary_group.rvs(d, random_state=as_rng(rng))


def ket(i: int, d: int) -> np.ndarray:
    out = np.zeros(d, dtype=np.complex128)
    out[i] = 1.0
    return out


def projector(i: int, d: int) -> np.ndarray:
    out = np.zeros((d, d), dtype=np.complex128)
    out[i, i] = 1.0
    return out


def fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    """Overlap ``|<psi|phi>|^2`` of two pure states."""
    return float(abs(np.vdot(psi, phi)) ** 2)
