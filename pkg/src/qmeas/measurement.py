"""Generalized measurements given by Kraus operators.

A :class:`Measurement` is an ordered stack of ``n`` operators ``M_r`` acting
on a ``d``-dimensional space. Outcome indices are 0-based throughout the
package. All information contents are functions of the singular values of the
operators, collected in a :class:`SingularTable`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ImpossibleOutcomeError, InvalidMeasurementError
from .linalg import (
    as_rng,
    check_state,
    dagger,
    inverse_sqrt_psd,
    singular_values,
    svd,
)

COMPLETENESS_TOL = 1e-8
ZERO_PROBABILITY = 1e-14


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Measurement:
    """Kraus operators ``{M_r}`` of a measurement on a ``d``-dimensional space.

    Parameters
    ----------
    operators : array_like
        Sequence of ``n >= 1`` square matrices of equal size, or an array of
        shape ``(n, d, d)``.
    label : str
        Free-text description.

    Completeness is not enforced on construction so that near-miss operator
    sets can be inspected; use :func:`validate_completeness` or
    :func:`check_measurement`.
    """

    operators: np.ndarray
    label: str = ""

    def __post_init__(self):
        ops = self.operators
        if isinstance(ops, (list, tuple)):
            shapes = {np.shape(op) for op in ops}
            if len(ops) == 0:
                raise DimensionError("a measurement needs at least one operator")
            if len(shapes) != 1:
                raise DimensionError(f"operators have mismatched shapes {sorted(shapes)}")
        arr = np.asarray(ops, dtype=np.complex128)
        if arr.ndim != 3 or arr.shape[0] == 0 or arr.shape[1] != arr.shape[2] or arr.shape[1] == 0:
            raise DimensionError(f"operators must have shape (n, d, d), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidMeasurementError("operators have non-finite entries")
        object.__setattr__(self, "operators", _freeze(arr))

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.operators.shape[0]

    def __len__(self) -> int:
        return self.n_outcomes

    def __repr__(self) -> str:
        return f"Measurement(dim={self.dim}, n_outcomes={self.n_outcomes}, label={self.label!r})"

    def effects(self) -> np.ndarray:
        """POVM elements ``M_r^dagger M_r``."""
        return dagger(self.operators) @ self.operators


@dataclass(frozen=True, eq=False)
class SingularTable:
    """Singular values ``lam[r, i]`` of every operator, decreasing in ``i``.

    The columns ``v_i = lam[:, i]`` are the per-index vectors used by the
    saturation conditions.
    """

    lam: np.ndarray
    sum_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float, copy=True)
        if lam.ndim != 2 or 0 in lam.shape:
            raise DimensionError(f"singular table must be 2-D (n, d), got shape {lam.shape}")
        if not np.all(np.isfinite(lam)):
            raise InvalidMeasurementError("singular values must be finite")
        if np.any(lam < 0):
            raise InvalidMeasurementError("singular values must be non-negative")
        lam = -np.sort(-lam, axis=1)
        d = lam.shape[1]
        total = float(np.sum(lam**2))
        if abs(total - d) > self.sum_tol * d:
            raise InvalidMeasurementError(
                f"singular values violate the completeness sum rule: sum of squares {total!r} != {d}"
            )
        lam.flags.writeable = False
        object.__setattr__(self, "lam", lam)

    @property
    def dim(self) -> int:
        return self.lam.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.lam.shape[0]

    @property
    def vectors(self) -> np.ndarray:
        """Rows are ``v_i = (lam[0, i], ..., lam[n-1, i])``."""
        return self.lam.T

    @property
    def largest(self) -> np.ndarray:
        return self.lam[:, 0]

    @property
    def smallest(self) -> np.ndarray:
        return self.lam[:, -1]


@dataclass(frozen=True, eq=False)
class CanonicalMeasurement:
    """Per-operator SVD ``M_r = V_r D_r W_r`` of a measurement.

    ``operators`` gives the frame with ``W_r`` absorbed, ``V_r D_r``. The right
    unitaries are kept so that state-level constructions (estimates,
    reversals) can be mapped back onto the operators the caller supplied.
    """

    base: Measurement
    left_unitaries: np.ndarray
    singulars: np.ndarray
    right_unitaries: np.ndarray

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def n_outcomes(self) -> int:
        return self.base.n_outcomes

    @property
    def diagonals(self) -> np.ndarray:
        d = self.dim
        out = np.zeros((self.n_outcomes, d, d), dtype=np.complex128)
        idx = np.arange(d)
        out[:, idx, idx] = self.singulars
        return out

    @property
    def operators(self) -> np.ndarray:
        return self.left_unitaries * self.singulars[:, None, :]

    def table(self) -> SingularTable:
        return SingularTable(self.singulars)


def completeness_residual(m: Measurement) -> float:
    """Frobenius norm of ``sum_r M_r^dagger M_r - 1``."""
    total = m.effects().sum(axis=0)
    return float(np.linalg.norm(total - np.eye(m.dim)))


def validate_completeness(m: Measurement, tol: float = COMPLETENESS_TOL) -> tuple[bool, float]:
    """Return ``(is_complete, residual)`` for the completeness relation."""
    residual = completeness_residual(m)
    return residual <= tol, residual


def check_measurement(m: Measurement, tol: float = COMPLETENESS_TOL) -> Measurement:
    """Raise :class:`InvalidMeasurementError` unless ``m`` is complete within ``tol``."""
    if not isinstance(m, Measurement):
        m = Measurement(m)
    ok, residual = validate_completeness(m, tol)
    if not ok:
        raise InvalidMeasurementError(
            f"completeness residual {residual:.3e} exceeds tolerance {tol:.1e}"
        )
    return m


def _fix_phases(v: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Rotate each right singular vector so its largest entry is real positive;
    # the compensating phase goes to the matching left vector.
    v = v.copy()
    w = w.copy()
    for k in range(w.shape[0]):
        j = int(np.argmax(np.abs(w[k]) > np.abs(w[k]).max() * (1 - 1e-12)))
        phase = w[k, j] / abs(w[k, j])
        w[k] /= phase
        v[:, k] *= phase
    return v, w


def canonicalize(m: Measurement, tol: float = COMPLETENESS_TOL) -> CanonicalMeasurement:
    """Decompose every operator as ``V_r D_r W_r`` with decreasing ``D_r``.

    Phases are fixed so that each row of ``W_r`` has its dominant entry real
    and positive; diagonal operators with decreasing entries therefore come
    back with ``V_r = W_r = 1``.
    """
    m = check_measurement(m, tol)
    lefts, sings, rights = [], [], []
    for op in m.operators:
        res = svd(op)
        v, w = _fix_phases(res.left, res.right_adjoint)
        lefts.append(v)
        sings.append(res.singulars)
        rights.append(w)
    return CanonicalMeasurement(
        base=m,
        left_unitaries=np.array(lefts),
        singulars=np.array(sings),
        right_unitaries=np.array(rights),
    )


def singular_table(m: Measurement, tol: float = COMPLETENESS_TOL) -> SingularTable:
    """Singular table of a complete measurement."""
    m = check_measurement(m, tol)
    return SingularTable(singular_values(m.operators), sum_tol=max(tol, 1e-10))


def _check_outcome(m: Measurement, r: int) -> None:
    if not 0 <= r < m.n_outcomes:
        raise IndexError(f"outcome {r} out of range for {m.n_outcomes} outcomes")


def outcome_probability(m: Measurement, r: int, psi) -> float:
    """``p(r, psi) = <psi| M_r^dagger M_r |psi>``."""
    _check_outcome(m, r)
    psi = check_state(psi, m.dim)
    out = m.operators[r] @ psi
    return float(np.vdot(out, out).real)


def post_measurement_state(m: Measurement, r: int, psi) -> np.ndarray:
    """Normalized state ``M_r |psi> / sqrt(p(r, psi))`` after outcome ``r``."""
    _check_outcome(m, r)
    psi = check_state(psi, m.dim)
    out = m.operators[r] @ psi
    p = float(np.vdot(out, out).real)
    if p < ZERO_PROBABILITY:
        raise ImpossibleOutcomeError(f"outcome {r} has probability {p:.3e} for this state")
    return out / np.sqrt(p)


def optimal_estimate(cm: CanonicalMeasurement, r: int, tol: float = 1e-10) -> np.ndarray:
    """Best guess of the input state after outcome ``r``.

    This is a right singular vector of ``M_r`` for its largest singular
    value. When the largest value is degenerate, the projection of the
    lowest-index basis ket onto that eigenspace is returned, so the answer is
    deterministic (``|0>`` for a unitary operator).
    """
    _check_outcome(cm.base, r)
    lam = cm.singulars[r]
    w = cm.right_unitaries[r]
    top = np.flatnonzero(lam >= lam[0] - tol)
    if top.size == 1:
        vec = np.conj(w[0])
    else:
        basis = np.conj(w[top]).T  # columns span the top right-singular space
        proj = basis @ dagger(basis)
        norms = np.linalg.norm(proj, axis=0)
        k = int(np.flatnonzero(norms > 1e-6)[0])
        vec = proj[:, k] / norms[k]
    j = int(np.argmax(np.abs(vec) > np.abs(vec).max() * (1 - 1e-12)))
    return vec * (abs(vec[j]) / vec[j])


def random_measurement_operators(d: int, n: int, count: int, rng=None) -> np.ndarray:
    """Stack of random measurements, shape ``(count, n, d, d)``.

    Each operator set is ``M_r = G_r S^(-1/2)`` with complex Gaussian
    ``G_r`` and ``S = sum_r G_r^dagger G_r``, so completeness holds up to
    rounding of the inverse square root.
    """
    if d < 1 or n < 1 or count < 1:
        raise DimensionError("d, n and count must be positive")
    gen = as_rng(rng)
    g = gen.standard_normal((count, n, d, 2 * d)).view(np.complex128)
    s = np.einsum("bnji,bnjk->bik", np.conj(g), g)
    return g @ inverse_sqrt_psd(s)[:, None]


def random_measurement(d: int, n: int, rng=None) -> Measurement:
    """One random complete measurement with ``n`` outcomes on dimension ``d``."""
    return Measurement(random_measurement_operators(d, n, 1, rng)[0], label=f"random d={d} n={n}")


def positive_frame(m: Measurement, tol: float = COMPLETENESS_TOL) -> Measurement:
    """Replace every ``M_r`` by ``|M_r| = sqrt(M_r^dagger M_r)``.

    This is the left-unitary frame in which ``|Tr M_r|`` reaches
    ``sum_i lam[r, i]``, so the as-given operation fidelity of the result
    equals the maximal one.
    """
    cm = canonicalize(m, tol)
    w = cm.right_unitaries
    ops = dagger(w) @ (cm.singulars[:, :, None] * w)
    return Measurement(ops, label=m.label)
