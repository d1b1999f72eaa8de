"""Information gain, disturbance and reversibility from singular tables.

All closed forms take a :class:`~qmeas.measurement.SingularTable` (outcomes
by dimension, decreasing rows). The private ``_*`` helpers accept raw arrays
with arbitrary leading batch axes, shape ``(..., n, d)``, and are what the
randomized certification uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DimensionError, ModelError
from .linalg import as_rng, haar_states
from .measurement import Measurement, SingularTable, singular_table
from .oracle import OracleEstimate, monte_carlo
from .reversal import ReversalOperation, ReversalSingularTable, _check_compatible

ANALYTIC = "analytic"


def _gain(lam: np.ndarray) -> np.ndarray:
    d = lam.shape[-1]
    return (d + np.sum(lam[..., 0] ** 2, axis=-1)) / (d * (d + 1))


def _op_fidelity(lam: np.ndarray) -> np.ndarray:
    d = lam.shape[-1]
    return (d + np.sum(np.sum(lam, axis=-1) ** 2, axis=-1)) / (d * (d + 1))


def _reversibility(lam: np.ndarray) -> np.ndarray:
    return np.sum(lam[..., -1] ** 2, axis=-1)


def _overall_fidelity(lam: np.ndarray, rlam: np.ndarray) -> np.ndarray:
    d = lam.shape[-1]
    traces = np.sum(lam[..., :, None, :] * rlam, axis=-1)  # (..., n, m)
    return (d + np.sum(traces**2, axis=(-2, -1))) / (d * (d + 1))


def _table(t) -> SingularTable:
    if isinstance(t, SingularTable):
        return t
    if isinstance(t, Measurement):
        return singular_table(t)
    return SingularTable(t)


@dataclass(frozen=True)
class InfoContents:
    """Information gain, operation fidelity, disturbance and reversibility of a measurement."""

    gain: float
    op_fidelity: float
    disturbance: float
    reversibility: float
    dim: int
    provenance: str = ANALYTIC

    def in_range(self, tol: float = 1e-10) -> bool:
        d = self.dim
        return (
            1 / d - tol <= self.gain <= 2 / (d + 1) + tol
            and 2 / (d + 1) - tol <= self.op_fidelity <= 1 + tol
            and -tol <= self.disturbance <= (d - 1) / (d + 1) + tol
            and -tol <= self.reversibility <= 1 + tol
        )

    def as_dict(self) -> dict:
        return {
            "G": self.gain,
            "F": self.op_fidelity,
            "D": self.disturbance,
            "R": self.reversibility,
            "dim": self.dim,
            "provenance": self.provenance,
        }


def information_gain(t: SingularTable) -> float:
    """Maximal average estimation fidelity, ``(d + sum_r lam[r, 0]**2) / (d (d + 1))``."""
    return float(_gain(_table(t).lam))


def operation_fidelity(t: SingularTable) -> float:
    """Maximal average operation fidelity, ``(d + sum_r (sum_i lam[r, i])**2) / (d (d + 1))``.

    This is the maximum over the left unitary freedom of each operator.
    """
    return float(_op_fidelity(_table(t).lam))


def disturbance(t: SingularTable) -> float:
    return 1.0 - operation_fidelity(t)


def reversibility(t: SingularTable) -> float:
    """Maximal overall success probability of an exact reversal, ``sum_r lam[r, -1]**2``."""
    return float(_reversibility(_table(t).lam))


def average_operation_fidelity(m: Measurement) -> float:
    """Operation fidelity of ``m`` in its given frame, ``(d + sum_r |Tr M_r|^2) / (d (d + 1))``.

    Never exceeds :func:`operation_fidelity`; equal when every ``M_r`` is
    positive semidefinite up to a global phase.
    """
    d = m.dim
    traces = np.trace(m.operators, axis1=1, axis2=2)
    return float((d + np.sum(np.abs(traces) ** 2)) / (d * (d + 1)))


def overall_fidelity(t: SingularTable, rt: ReversalSingularTable) -> float:
    """Maximal operation fidelity of measurement followed by reversal.

    ``(d + sum_{r,l} (sum_i lam[r, i] rlam[r, l, i])**2) / (d (d + 1))`` with
    the reversal values aligned to the measurement's singular basis.
    """
    t = _table(t)
    if rt.n_outcomes != t.n_outcomes or rt.dim != t.dim:
        raise DimensionError(
            f"reversal table shape {rt.lam.shape} incompatible with singular table {t.lam.shape}"
        )
    return float(_overall_fidelity(t.lam, rt.lam))


def info_contents(t) -> InfoContents:
    """All three contents from a singular table or a complete measurement."""
    t = _table(t)
    f = operation_fidelity(t)
    return InfoContents(
        gain=information_gain(t),
        op_fidelity=f,
        disturbance=1.0 - f,
        reversibility=reversibility(t),
        dim=t.dim,
    )


@dataclass(frozen=True)
class ErrorModel:
    """Imperfect reversal: the success branch outputs ``channel(psi, eps)``.

    Parameters
    ----------
    channel : callable
        ``(psi, eps) -> rho``, a ``d x d`` density operator.
    density : callable, optional
        Probability density of ``eps`` on ``[0, 1]``. May be omitted when
        ``inverse_cdf`` is given (e.g. a point mass).
    inverse_cdf : callable, optional
        Vectorized map from uniform ``[0, 1)`` draws to ``eps``. Without it
        ``eps`` is drawn by rejection sampling from ``density``.
    """

    channel: Callable[[np.ndarray, float], np.ndarray]
    density: Callable[[float], float] | None = None
    inverse_cdf: Callable[[np.ndarray], np.ndarray] | None = None

    def validate(self, tol: float = 1e-8) -> None:
        if self.density is None:
            if self.inverse_cdf is None:
                raise ModelError("error model needs a density or an inverse CDF")
            return
        total, _ = integrate.quad(self.density, 0.0, 1.0)
        if abs(total - 1.0) > tol:
            raise ModelError(f"error density integrates to {total!r}, not 1")

    def sample_eps(self, gen: np.random.Generator, size: int) -> np.ndarray:
        if self.inverse_cdf is not None:
            return np.asarray(self.inverse_cdf(gen.random(size)), dtype=float) * np.ones(size)
        grid = np.linspace(0.0, 1.0, 2001)
        bound = 1.05 * max(float(np.max([self.density(x) for x in grid])), 1e-300)
        out = np.empty(0)
        while out.size < size:
            x = gen.random(2 * size)
            keep = gen.random(2 * size) * bound < np.array([self.density(v) for v in x])
            out = np.concatenate([out, x[keep]])
        return out[:size]


def depolarizing_channel(psi: np.ndarray, eps: float) -> np.ndarray:
    """``(1 - eps) |psi><psi| + eps 1/d``."""
    d = psi.shape[0]
    return (1 - eps) * np.outer(psi, np.conj(psi)) + eps * np.eye(d) / d


def identity_channel(psi: np.ndarray, eps: float) -> np.ndarray:
    return np.outer(psi, np.conj(psi))


def uniform_error_model(channel=depolarizing_channel) -> ErrorModel:
    return ErrorModel(channel, density=lambda x: 1.0, inverse_cdf=lambda u: u)


def point_mass_error_model(eps: float, channel=depolarizing_channel) -> ErrorModel:
    return ErrorModel(channel, inverse_cdf=lambda u: np.full_like(u, eps))


def _check_density_operators(rho: np.ndarray, tol: float = 1e-9) -> None:
    herm = np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))))
    traces = np.trace(rho, axis1=-2, axis2=-1)
    if herm > tol or np.max(np.abs(traces - 1.0)) > tol:
        raise ModelError("error channel returned a non-Hermitian or non-unit-trace operator")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise ModelError("error channel returned an operator that is not positive semidefinite")


def reversibility_with_errors(
    m: Measurement,
    rev: ReversalOperation,
    em: ErrorModel,
    samples: int = 100_000,
    rng=None,
    n_jobs: int = 1,
) -> OracleEstimate:
    """Reversibility when the successful reversal outputs a faulty state.

    Returns ``sum_r |eta_r|^2 * F_s`` where ``F_s`` is the Monte Carlo average
    of ``<psi|rho(psi, eps)|psi>`` over Haar states and ``eps ~ density``.
    The reversal is taken as given; it is not re-optimized for the errors.
    """
    _check_compatible(rev, m)
    em.validate()
    d = m.dim
    eta_sq = 0.0
    for r, (block, s) in enumerate(zip(rev.per_outcome, rev.success_counts)):
        if s:
            eta_sq += abs(np.trace(block[0] @ m.operators[r]) / d) ** 2

    def sampler(gen, size):
        psi = haar_states(d, size, gen)
        eps = em.sample_eps(gen, size)
        rho = np.array([em.channel(p, e) for p, e in zip(psi, eps)])
        _check_density_operators(rho)
        return np.einsum("si,sij,sj->s", np.conj(psi), rho, psi).real

    fs = monte_carlo(sampler, samples, as_rng(rng), n_jobs=n_jobs, chunk=1 << 14)
    return OracleEstimate(
        value=float(eta_sq * fs.value),
        std_error=float(eta_sq * fs.std_error),
        samples=fs.samples,
        method=fs.method,
        variance=float(eta_sq**2 * fs.variance),
    )
