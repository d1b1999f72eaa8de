"""Independent checks of the closed-form information contents.

Two routes are offered. The exact route integrates the two-copy Haar
average with Schur's lemma,

    int dpsi <psi|a|psi><psi|b|psi> = (Tr a Tr b + Tr ab) / (d (d + 1)),

and never touches singular values. The Monte Carlo route samples Haar
states and evaluates the defining state-level quantities directly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, NumericError
from .linalg import as_rng, check_square, check_state, dagger, haar_states
from .measurement import ZERO_PROBABILITY, Measurement, canonicalize, check_measurement, optimal_estimate
from .reversal import ReversalOperation, _check_compatible

EXACT = "exact_schur"
MONTE_CARLO = "monte_carlo"
KINDS = ("gain", "op_fidelity", "overall_fidelity", "reversibility")


@dataclass(frozen=True)
class OracleEstimate:
    """Value of a Haar average with its standard error (zero for the exact route)."""

    value: float
    std_error: float = 0.0
    samples: int = 0
    method: str = EXACT
    variance: float = 0.0

    def agrees_with(self, reference: float, n_sigma: float = 5.0, floor: float = 1e-12) -> bool:
        """``|value - reference| <= n_sigma * std_error + floor``."""
        return abs(self.value - reference) <= n_sigma * self.std_error + floor


def _real_if_close(z: complex, scale: float) -> complex | float:
    if abs(z.imag) <= 1e-12 * max(1.0, scale):
        return float(z.real)
    return complex(z)


def schur_pair_average(a, b) -> float | complex:
    """Haar average of ``<psi|a|psi><psi|b|psi>`` from traces.

    Real for Hermitian pairs and for ``b = a^dagger``; complex otherwise.
    """
    a = check_square(a, "a")
    b = check_square(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"operators have shapes {a.shape} and {b.shape}")
    d = a.shape[0]
    z = (np.trace(a) * np.trace(b) + np.trace(a @ b)) / (d * (d + 1))
    return _real_if_close(complex(z), float(np.linalg.norm(a) * np.linalg.norm(b)))


def swap_operator(d: int) -> np.ndarray:
    """``S |i>|j> = |j>|i>`` on ``C^d (x) C^d``."""
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return s


def schur_coefficients(o: np.ndarray, d: int) -> tuple[complex, complex]:
    """Coefficients of ``1 (x) 1`` and ``S`` in the twirl of a two-copy operator."""
    s = swap_operator(d)
    tr_o = np.trace(o)
    tr_os = np.trace(o @ s)
    denom = d**2 * (d**2 - 1)
    alpha1 = (d**2 * tr_o - d * tr_os) / denom
    alpha2 = (d**2 * tr_os - d * tr_o) / denom
    return complex(alpha1), complex(alpha2)


def schur_pair_average_two_copy(a, b) -> float | complex:
    """Same average as :func:`schur_pair_average`, via the literal twirl.

    The twirled operator is ``alpha1 1 + alpha2 S`` and its expectation in
    ``|00>`` is ``alpha1 + alpha2``.
    """
    a = check_square(a, "a")
    b = check_square(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"operators have shapes {a.shape} and {b.shape}")
    d = a.shape[0]
    alpha1, alpha2 = schur_coefficients(np.kron(a, b), d)
    return _real_if_close(alpha1 + alpha2, float(np.linalg.norm(a) * np.linalg.norm(b)))


def _check_estimates(m: Measurement, estimates) -> np.ndarray:
    est = np.asarray(estimates, dtype=np.complex128)
    if est.shape != (m.n_outcomes, m.dim):
        raise DimensionError(f"need one estimate of dimension {m.dim} per outcome, got shape {est.shape}")
    for e in est:
        check_state(e, m.dim)
    return est


def optimal_estimates(m: Measurement) -> np.ndarray:
    cm = canonicalize(m)
    return np.array([optimal_estimate(cm, r) for r in range(m.n_outcomes)])


def exact_estimation_fidelity(m: Measurement, estimates=None) -> OracleEstimate:
    """Average estimation fidelity for the given per-outcome guesses.

    Without ``estimates`` the optimal guesses are used.
    """
    m = check_measurement(m)
    est = optimal_estimates(m) if estimates is None else _check_estimates(m, estimates)
    total = 0.0
    for effect, e in zip(m.effects(), est):
        total += schur_pair_average(effect, np.outer(e, np.conj(e)))
    return OracleEstimate(float(np.real(total)))


def exact_operation_fidelity(m: Measurement) -> OracleEstimate:
    """Average input/post-measurement fidelity of ``m`` exactly as given (no frame optimization)."""
    m = check_measurement(m)
    total = sum(schur_pair_average(op, dagger(op)) for op in m.operators)
    return OracleEstimate(float(np.real(total)))


def _products(m: Measurement, rev: ReversalOperation, success_only: bool) -> np.ndarray:
    _check_compatible(rev, m)
    prods = []
    for r, (block, s) in enumerate(zip(rev.per_outcome, rev.success_counts)):
        use = block[:s] if success_only else block
        prods.extend(op @ m.operators[r] for op in use)
    if not prods:
        return np.zeros((0, m.dim, m.dim), dtype=np.complex128)
    return np.array(prods)


def exact_overall_fidelity(m: Measurement, rev: ReversalOperation) -> OracleEstimate:
    """Average fidelity of the full process ``R o M`` over all branches."""
    m = check_measurement(m)
    total = sum(schur_pair_average(k, dagger(k)) for k in _products(m, rev, False))
    return OracleEstimate(float(np.real(total)))


def exact_reversibility(m: Measurement, rev: ReversalOperation) -> OracleEstimate:
    """Average probability of the success branches, ``sum |<psi|R_{r,0} M_r|psi>|^2``."""
    m = check_measurement(m)
    total = sum(schur_pair_average(k, dagger(k)) for k in _products(m, rev, True))
    return OracleEstimate(float(np.real(total)))


def _combine(parts):
    # Chan et al. pairwise merge of (count, mean, M2).
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        if nb == 0:
            continue
        delta = mb - mean
        tot = n + nb
        mean = mean + delta * nb / tot
        m2 = m2 + m2b + delta**2 * n * nb / tot
        n = tot
    return n, mean, m2


def _run_stream(sampler, count: int, gen: np.random.Generator, chunk: int):
    parts = []
    done = 0
    while done < count:
        size = min(chunk, count - done)
        vals = np.asarray(sampler(gen, size), dtype=float)
        mu = float(vals.mean())
        parts.append((size, mu, float(np.sum((vals - mu) ** 2))))
        done += size
    return _combine(parts)


def monte_carlo(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    n_samples: int,
    rng=None,
    n_jobs: int = 1,
    chunk: int = 1 << 16,
) -> OracleEstimate:
    """Sample mean of ``sampler(gen, size)`` values with its standard error.

    With ``n_jobs > 1`` the samples are split over independently seeded
    child streams (``Generator.spawn``) run in threads; the result depends
    only on the seed, ``n_samples`` and ``n_jobs``.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    gen = as_rng(rng)
    if n_jobs <= 1:
        parts = [_run_stream(sampler, n_samples, gen, chunk)]
    else:
        streams = gen.spawn(n_jobs)
        sizes = [n_samples // n_jobs + (1 if k < n_samples % n_jobs else 0) for k in range(n_jobs)]
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda a: _run_stream(sampler, a[0], a[1], chunk), zip(sizes, streams)))
    n, mean, m2 = _combine(parts)
    var = m2 / (n - 1)
    return OracleEstimate(float(mean), float(np.sqrt(var / n)), n, MONTE_CARLO, float(var))


def _expectations(psi: np.ndarray, ops: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``ops[k] @ psi[s]`` as shape ``(s, k, d)`` and ``<psi|ops[k]|psi>`` as ``(s, k)``."""
    out = np.tensordot(psi, ops, axes=([1], [2]))
    amp = np.einsum("si,ski->sk", np.conj(psi), out)
    return out, amp


def mc_average(
    kind: str,
    m: Measurement,
    rev: ReversalOperation | None = None,
    estimates=None,
    n_samples: int = 100_000,
    rng=None,
    n_jobs: int = 1,
    chunk: int = 1 << 16,
) -> OracleEstimate:
    """Monte Carlo Haar average of one information content.

    Parameters
    ----------
    kind : {"gain", "op_fidelity", "overall_fidelity", "reversibility"}
        ``gain`` averages ``sum_r p(r) |<est_r|psi>|^2`` (optimal estimates
        unless given); ``op_fidelity`` averages ``sum_r p(r) |<psi_r|psi>|^2``
        with the post-measurement states; the last two need ``rev`` and
        average ``|<psi|R_{r,l} M_r|psi>|^2`` over all, respectively the
        success, branches.
    n_samples : int
        At least 1000.

    Raises
    ------
    NumericError
        For ``reversibility`` with an optimal reversal whose per-sample
        values are not constant (variance above ``1e-20``).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    if n_samples < 1000:
        raise ValueError("Monte Carlo averages need at least 1000 samples")
    m = check_measurement(m)
    d = m.dim
    ops = m.operators

    if kind == "gain":
        est = optimal_estimates(m) if estimates is None else _check_estimates(m, estimates)

        def sampler(gen, size):
            psi = haar_states(d, size, gen)
            out = np.tensordot(psi, ops, axes=([1], [2]))
            prob = np.sum(np.abs(out) ** 2, axis=2)
            overlap = np.abs(psi @ np.conj(est).T) ** 2
            return np.sum(prob * overlap, axis=1)

    elif kind == "op_fidelity":

        def sampler(gen, size):
            psi = haar_states(d, size, gen)
            out = np.tensordot(psi, ops, axes=([1], [2]))
            prob = np.sum(np.abs(out) ** 2, axis=2)
            live = prob > ZERO_PROBABILITY
            post = out / np.sqrt(np.where(live, prob, 1.0))[..., None]
            overlap = np.abs(np.einsum("si,sri->sr", np.conj(psi), post)) ** 2
            return np.sum(np.where(live, prob * overlap, 0.0), axis=1)

    else:
        if rev is None:
            raise ValueError(f"kind {kind!r} needs a reversal operation")
        prods = _products(m, rev, success_only=kind == "reversibility")

        def sampler(gen, size):
            psi = haar_states(d, size, gen)
            if len(prods) == 0:
                return np.zeros(size)
            _, amp = _expectations(psi, prods)
            return np.sum(np.abs(amp) ** 2, axis=1)

    result = monte_carlo(sampler, n_samples, rng, n_jobs=n_jobs, chunk=chunk)
    if kind == "reversibility" and rev.completion == "principal_sqrt" and result.variance > 1e-20:
        raise NumericError(
            f"optimal success probability varied across input states (variance {result.variance:.3e})"
        )
    return result
