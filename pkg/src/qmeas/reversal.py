"""Reversing operations conditioned on the measurement outcome.

For outcome ``r`` a reversal is a list of operators ``R_{r,l}`` with
``sum_l R_{r,l}^dagger R_{r,l} = 1``. The first ``s_r`` operators (``s_r`` is
0 or 1) are success branches: ``R_{r,0} M_r`` is proportional to the
identity, so the input state is recovered exactly when that branch fires.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ImpossibleOutcomeError, NoSuccessBranchError
from .linalg import check_state, dagger
from .measurement import (
    ZERO_PROBABILITY,
    CanonicalMeasurement,
    Measurement,
    SingularTable,
)

PSEUDO_INVERSE_CUTOFF = 1e-12
# singular values this close to the smallest one count as equal to it; without
# this, one-ulp differences turn into sqrt(eps) ~ 1e-8 completion entries
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ReversalOperation:
    """Outcome-conditioned reversal ``{R_{r,l}}``.

    Attributes
    ----------
    per_outcome : tuple of numpy.ndarray
        ``per_outcome[r]`` has shape ``(m_r, d, d)``.
    success_counts : tuple of int
        Number of leading success operators for each outcome (0 or 1).
    completion : str
        How the non-success operators were chosen.
    """

    per_outcome: tuple
    success_counts: tuple
    completion: str = "user"

    def __post_init__(self):
        ops = []
        for r, block in enumerate(self.per_outcome):
            arr = np.array(block, dtype=np.complex128, copy=True)
            if arr.ndim == 2:
                arr = arr[None]
            if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[0] == 0:
                raise DimensionError(f"reversal block {r} must have shape (m, d, d), got {arr.shape}")
            arr.flags.writeable = False
            ops.append(arr)
        dims = {a.shape[1] for a in ops}
        if len(dims) != 1:
            raise DimensionError(f"reversal operators have mismatched dimensions {sorted(dims)}")
        counts = tuple(int(s) for s in self.success_counts)
        if len(counts) != len(ops):
            raise DimensionError(f"{len(counts)} success counts for {len(ops)} outcomes")
        for r, (s, a) in enumerate(zip(counts, ops)):
            if s not in (0, 1):
                raise ValueError(f"outcome {r}: only 0 or 1 success branches are supported, got {s}")
            if s > a.shape[0]:
                raise ValueError(f"outcome {r}: success count exceeds number of operators")
        object.__setattr__(self, "per_outcome", tuple(ops))
        object.__setattr__(self, "success_counts", counts)

    @property
    def dim(self) -> int:
        return self.per_outcome[0].shape[1]

    @property
    def n_outcomes(self) -> int:
        return len(self.per_outcome)

    def completeness_residuals(self) -> np.ndarray:
        eye = np.eye(self.dim)
        return np.array(
            [np.linalg.norm((dagger(a) @ a).sum(axis=0) - eye) for a in self.per_outcome]
        )


@dataclass(frozen=True, eq=False)
class ReversalSingularTable:
    """Reversal singular values aligned with the measurement's singular basis.

    ``lam[r, l, i]`` pairs with ``lam_M[r, i]`` of the measurement. Slot
    ``l = 0`` holds the success branch (all zeros when outcome ``r`` has
    none); remaining slots are non-success branches, zero padded. Completeness
    reads ``sum_l lam[r, l, i]**2 == 1``.
    """

    lam: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float, copy=True)
        if lam.ndim != 3:
            raise DimensionError(f"reversal table must have shape (n, m, d), got {lam.shape}")
        lam.flags.writeable = False
        object.__setattr__(self, "lam", lam)

    @property
    def n_outcomes(self) -> int:
        return self.lam.shape[0]

    @property
    def dim(self) -> int:
        return self.lam.shape[2]

    def completeness_residual(self) -> float:
        return float(np.max(np.abs((self.lam**2).sum(axis=1) - 1.0)))


def _optimal_factors(lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Success and non-success diagonal factors for one row of singular values."""
    out = optimal_reversal_array(lam[None])[0]
    return out[0], out[1]


def optimal_reversal(cm: CanonicalMeasurement) -> ReversalOperation:
    """Reversal maximizing the overall success probability.

    For every outcome with smallest singular value ``lmin > 0``:

    * success ``R_{r,0} = lmin W_r^dagger D_r^{-1} V_r^dagger`` so that
      ``R_{r,0} M_r = lmin * 1``;
    * completion ``R_{r,1} = W_r^dagger sqrt(1 - lmin^2 D_r^{-2}) V_r^dagger``.

    Outcomes with ``lmin = 0`` get the identity as their only, non-success,
    operator. With ``W_r = 1`` this is the textbook ``lmin D_r^{-1} V_r^dagger``.
    """
    blocks, counts = [], []
    d = cm.dim
    for v, lam, w in zip(cm.left_unitaries, cm.singulars, cm.right_unitaries):
        if lam[-1] > PSEUDO_INVERSE_CUTOFF:
            success, rest = _optimal_factors(lam)
            wd, vd = dagger(w), dagger(v)
            blocks.append(np.array([(wd * success) @ vd, (wd * rest) @ vd]))
            counts.append(1)
        else:
            blocks.append(np.eye(d, dtype=np.complex128)[None])
            counts.append(0)
    return ReversalOperation(tuple(blocks), tuple(counts), completion="principal_sqrt")


def optimal_reversal_table(t: SingularTable) -> ReversalSingularTable:
    """Aligned singular values of :func:`optimal_reversal`, from the table alone.

    ``lam[r, 0, i] = lmin_r / lam_r_i`` and ``lam[r, 1, i] = sqrt(1 - lam[r, 0, i]**2)``;
    irreversible outcomes get ``(0, 1)``.
    """
    return ReversalSingularTable(optimal_reversal_array(t.lam))


def optimal_reversal_array(lam: np.ndarray) -> np.ndarray:
    """Vectorized core of :func:`optimal_reversal_table` for shape ``(..., n, d)``."""
    lam = np.asarray(lam, dtype=float)
    out = np.zeros(lam.shape[:-1] + (2, lam.shape[-1]))
    lmin = lam[..., -1:]
    reversible = lmin > PSEUDO_INVERSE_CUTOFF
    safe = np.where(lam > PSEUDO_INVERSE_CUTOFF, lam, 1.0)
    success = np.where(reversible & (lam > PSEUDO_INVERSE_CUTOFF), lmin / safe, 0.0)
    success = np.where(reversible & (lam - lmin <= DEGENERACY_TOL), 1.0, success)
    out[..., 0, :] = success
    out[..., 1, :] = np.sqrt(np.clip(1.0 - success**2, 0.0, None))
    return out


def reversal_singular_table(rev: ReversalOperation, cm: CanonicalMeasurement) -> ReversalSingularTable:
    """Aligned singular values ``||R_{r,l} v_{r,i}||`` of an explicit reversal.

    ``v_{r,i}`` is the ``i``-th left singular vector of ``M_r``. For
    reversals that are diagonal in the measurement's singular frame (such as
    :func:`optimal_reversal`) these are exactly the singular values entering
    the overall operation fidelity.
    """
    _check_compatible(rev, cm.base)
    n, d = cm.n_outcomes, cm.dim
    width = 1 + max(len(b) - s for b, s in zip(rev.per_outcome, rev.success_counts))
    out = np.zeros((n, width, d))
    for r, (block, s) in enumerate(zip(rev.per_outcome, rev.success_counts)):
        cols = np.linalg.norm(block @ cm.left_unitaries[r], axis=1)  # (m_r, d)
        if s:
            out[r, 0] = cols[0]
        out[r, 1 : 1 + len(block) - s] = cols[s:]
    return ReversalSingularTable(out)


def is_aligned(rev: ReversalOperation, cm: CanonicalMeasurement, tol: float = 1e-9) -> bool:
    """True when every ``W_r R_{r,l} V_r`` is diagonal within ``tol``."""
    for r, block in enumerate(rev.per_outcome):
        x = cm.right_unitaries[r] @ block @ cm.left_unitaries[r]
        off = x - np.einsum("lii->li", x)[..., None] * np.eye(cm.dim)
        if np.max(np.abs(off), initial=0.0) > tol:
            return False
    return True


def _check_compatible(rev: ReversalOperation, m: Measurement) -> None:
    if rev.dim != m.dim or rev.n_outcomes != m.n_outcomes:
        raise DimensionError(
            f"reversal ({rev.n_outcomes} outcomes, d={rev.dim}) does not match "
            f"measurement ({m.n_outcomes} outcomes, d={m.dim})"
        )


def success_amplitude(rev: ReversalOperation, cm: CanonicalMeasurement, r: int) -> float:
    """``|eta_r|`` where ``R_{r,0} M_r = eta_r * 1`` on the success branch."""
    _check_compatible(rev, cm.base)
    if not 0 <= r < rev.n_outcomes:
        raise IndexError(f"outcome {r} out of range")
    if rev.success_counts[r] == 0:
        raise NoSuccessBranchError(f"outcome {r} has no success branch")
    prod = rev.per_outcome[r][0] @ cm.base.operators[r]
    return float(abs(np.trace(prod)) / cm.dim)


def success_residuals(rev: ReversalOperation, m: Measurement) -> np.ndarray:
    """``||R_{r,0} M_r - eta_r 1||_F`` per outcome (0 where there is no success branch)."""
    _check_compatible(rev, m)
    out = np.zeros(m.n_outcomes)
    eye = np.eye(m.dim)
    for r, (block, s) in enumerate(zip(rev.per_outcome, rev.success_counts)):
        if s:
            prod = block[0] @ m.operators[r]
            eta = np.trace(prod) / m.dim
            out[r] = np.linalg.norm(prod - eta * eye)
    return out


def apply_reversal(rev: ReversalOperation, m: Measurement, r: int, l: int, psi) -> tuple[np.ndarray, float]:
    """Output state and joint probability of outcome ``r`` followed by branch ``l``."""
    _check_compatible(rev, m)
    if not 0 <= r < m.n_outcomes:
        raise IndexError(f"outcome {r} out of range")
    if not 0 <= l < len(rev.per_outcome[r]):
        raise IndexError(f"branch {l} out of range for outcome {r}")
    psi = check_state(psi, m.dim)
    out = rev.per_outcome[r][l] @ (m.operators[r] @ psi)
    p = float(np.vdot(out, out).real)
    if p < ZERO_PROBABILITY:
        raise ImpossibleOutcomeError(f"branch ({r}, {l}) has probability {p:.3e}")
    return out / np.sqrt(p), p


def compose_measurements(m2: Measurement, m1: Measurement) -> Measurement:
    """Sequential measurement ``m2 after m1`` with operators ``M2_b M1_a``.

    Outcomes are ordered with the first measurement's index major:
    composite index ``a * n2 + b``.
    """
    if m1.dim != m2.dim:
        raise DimensionError(f"cannot compose dimensions {m2.dim} and {m1.dim}")
    ops = np.einsum("bij,ajk->abik", m2.operators, m1.operators).reshape(-1, m1.dim, m1.dim)
    label = f"({m2.label}) o ({m1.label})" if m1.label or m2.label else ""
    return Measurement(ops, label=label)


def reversal_as_measurement(rev: ReversalOperation, m: Measurement) -> Measurement:
    """The full process ``R o M`` as a measurement with operators ``R_{r,l} M_r``."""
    _check_compatible(rev, m)
    ops = [op @ m.operators[r] for r, block in enumerate(rev.per_outcome) for op in block]
    return Measurement(np.array(ops), label=f"reversal o {m.label}" if m.label else "")
