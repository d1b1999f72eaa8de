"""Trade-off inequalities between gain, disturbance and reversibility.

Each ``check_*`` function returns an :class:`InequalityReport` with the two
sides written as ``lhs <= rhs``. The saturation classifier works on the
singular table (and, in strict mode, on the operators) and places a
measurement in one of five regions:

    (i)   all four relations saturated (von Neumann-type or unitary-type)
    (ii)  gain-disturbance, and therefore the other two optimal sets
    (iii) only the global gain-disturbance-reversibility relation
    (iv)  only gain-reversibility
    (v)   none
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError
from .info import InfoContents, _gain, _op_fidelity, _overall_fidelity, _reversibility
from .measurement import Measurement, SingularTable
from .reversal import ReversalSingularTable, compose_measurements, optimal_reversal_array

NUMERIC_TOL = 1e-10
SATURATION_TOL = 1e-8
RADICAND_TOL = 1e-12

REGIONS = ("(i)", "(ii)", "(iii)", "(iv)", "(v)")


@dataclass(frozen=True)
class InequalityReport:
    """One inequality ``lhs <= rhs`` evaluated for a measurement."""

    name: str
    lhs: float
    rhs: float
    slack: float
    satisfied: bool
    saturated: bool
    equality_condition: bool | None = field(default=None, compare=False)

    def __str__(self) -> str:
        state = "saturated" if self.saturated else ("ok" if self.satisfied else "VIOLATED")
        return f"{self.name:<7} lhs={self.lhs:.12g} rhs={self.rhs:.12g} slack={self.slack:+.3e} {state}"


def _report(name, lhs, rhs, num_tol=NUMERIC_TOL, sat_tol=SATURATION_TOL, condition=None) -> InequalityReport:
    slack = float(rhs - lhs)
    return InequalityReport(
        name=name,
        lhs=float(lhs),
        rhs=float(rhs),
        slack=slack,
        satisfied=slack >= -num_tol,
        saturated=abs(slack) <= sat_tol,
        equality_condition=condition,
    )


def _sqrt(x, what: str = "radicand"):
    """Square root that clamps tiny negative rounding noise and rejects the rest."""
    x = np.asarray(x, dtype=float)
    if np.any(x < -RADICAND_TOL):
        raise RangeError(f"{what} is negative ({np.min(x):.3e}); inputs are out of range")
    return np.sqrt(np.clip(x, 0.0, None))


# -- both sides as plain formulas; they broadcast over arrays -------------------


def gd_sides(gain, op_fid, d):
    lhs = _sqrt(op_fid - 1 / (d + 1), "F - 1/(d+1)")
    rhs = _sqrt(gain - 1 / (d + 1), "G - 1/(d+1)") + _sqrt((d - 1) * (2 / (d + 1) - gain), "2/(d+1) - G")
    return lhs, rhs


def gdr_sides(gain, op_fid, rev, d):
    lhs = _sqrt(op_fid - 1 / (d + 1), "F - 1/(d+1)")
    rhs = (
        _sqrt(gain - 1 / (d + 1), "G - 1/(d+1)")
        + _sqrt(rev / (d * (d + 1)), "R")
        + _sqrt((d - 2) * (2 / (d + 1) - gain - rev / (d * (d + 1))), "2/(d+1) - G - R/(d(d+1))")
    )
    return lhs, rhs


def gr_sides(gain, rev, d):
    return d * (d + 1) * gain + (d - 1) * rev, 2.0 * d * np.ones_like(np.asarray(gain, dtype=float))


def dr_sides(rev, dist, d):
    return (d - 1) * rev + (d + 1) * dist, (d - 1) * np.ones_like(np.asarray(rev, dtype=float))


def lemma1_sides(rev, overall_f, d):
    return 2 + (d - 1) * rev, (d + 1) * overall_f


# -- reports ---------------------------------------------------------------------


def check_gd(info: InfoContents, sat_tol: float = SATURATION_TOL) -> InequalityReport:
    """Gain-disturbance: ``sqrt(F - 1/(d+1)) <= sqrt(G - 1/(d+1)) + sqrt((d-1)(2/(d+1) - G))``."""
    lhs, rhs = gd_sides(info.gain, info.op_fidelity, info.dim)
    return _report("G-D", lhs, rhs, sat_tol=sat_tol)


def check_gr(info: InfoContents, sat_tol: float = SATURATION_TOL) -> InequalityReport:
    """Gain-reversibility: ``d(d+1) G + (d-1) R <= 2d``."""
    lhs, rhs = gr_sides(info.gain, info.reversibility, info.dim)
    return _report("G-R", lhs, rhs, sat_tol=sat_tol)


def check_gdr(info: InfoContents, sat_tol: float = SATURATION_TOL) -> InequalityReport:
    """Global relation bounding ``sqrt(F - 1/(d+1))`` by gain and reversibility together.

    For ``d = 2`` the right-hand side coincides with :func:`check_gd`'s.
    """
    lhs, rhs = gdr_sides(info.gain, info.op_fidelity, info.reversibility, info.dim)
    return _report("G-D-R", lhs, rhs, sat_tol=sat_tol)


def check_dr(info: InfoContents, sat_tol: float = SATURATION_TOL) -> InequalityReport:
    """Disturbance-reversibility: ``(d-1) R + (d+1) D <= d - 1``."""
    lhs, rhs = dr_sides(info.reversibility, info.disturbance, info.dim)
    return _report("D-R", lhs, rhs, sat_tol=sat_tol)


def lemma1_equality_condition(
    t: SingularTable, rt: ReversalSingularTable, tol: float = SATURATION_TOL
) -> bool:
    """Whether ``u_i^l . u_j^l = 0`` for ``i != j`` on every non-success branch ``l``.

    ``u_i^l`` is the vector over outcomes of ``lam[r, i] * rlam[r, l, i]``.
    """
    u = t.lam[:, None, :] * rt.lam  # (n, m, d)
    for l in range(1, u.shape[1]):
        gram = u[:, l, :].T @ u[:, l, :]
        off = gram - np.diag(np.diag(gram))
        if np.max(np.abs(off)) > tol:
            return False
    return True


def check_lemma1(
    info: InfoContents,
    overall_f: float,
    t: SingularTable | None = None,
    rt: ReversalSingularTable | None = None,
    sat_tol: float = SATURATION_TOL,
) -> InequalityReport:
    """``2 + (d-1) R <= (d+1) F(R o M)``.

    When both tables are given the report also carries the algebraic
    equality condition.
    """
    lhs, rhs = lemma1_sides(info.reversibility, overall_f, info.dim)
    cond = lemma1_equality_condition(t, rt, sat_tol) if t is not None and rt is not None else None
    return _report("Lemma1", lhs, rhs, sat_tol=sat_tol, condition=cond)


def check_lemma2(f_after: float, f_before: float, sat_tol: float = SATURATION_TOL) -> InequalityReport:
    """``F(R o M) <= F(M)``: a later operation never raises the operation fidelity."""
    return _report("Lemma2", f_after, f_before, sat_tol=sat_tol)


def fidelity_chain(measurements: list[Measurement]) -> np.ndarray:
    """Maximal operation fidelity after each stage of ``M_k o ... o M_1``.

    ``measurements`` is in time order (first applied first).
    """
    out = []
    total = None
    for m in measurements:
        total = m if total is None else compose_measurements(m, total)
        out.append(float(_op_fidelity(np.linalg.svd(total.operators, compute_uv=False))))
    return np.array(out)


def check_fidelity_chain(measurements: list[Measurement], sat_tol: float = SATURATION_TOL) -> list[InequalityReport]:
    """Lemma-2 reports for consecutive stages of a sequential composition."""
    f = fidelity_chain(measurements)
    return [check_lemma2(f[k + 1], f[k], sat_tol) for k in range(len(f) - 1)]


def rhs_gap_gdr_vs_gd(info: InfoContents) -> float:
    """How much tighter the global bound is than the gain-disturbance one (never negative)."""
    _, rhs_gd = gd_sides(info.gain, info.op_fidelity, info.dim)
    _, rhs_gdr = gdr_sides(info.gain, info.op_fidelity, info.reversibility, info.dim)
    return float(rhs_gd - rhs_gdr)


def all_reports(info: InfoContents, overall_f: float | None = None, sat_tol: float = SATURATION_TOL) -> list[InequalityReport]:
    reports = [
        check_gd(info, sat_tol),
        check_gr(info, sat_tol),
        check_gdr(info, sat_tol),
        check_dr(info, sat_tol),
    ]
    if overall_f is not None:
        reports.append(check_lemma1(info, overall_f, sat_tol=sat_tol))
        reports.append(check_lemma2(overall_f, info.op_fidelity, sat_tol))
    return reports


# -- saturation classifier -------------------------------------------------------


@dataclass(frozen=True)
class VennRegion:
    """Membership in the four optimal-measurement sets."""

    in_GDR: bool
    in_GD: bool
    in_GR: bool
    in_DR: bool
    region_label: str

    def memberships(self) -> dict:
        return {"G-D-R": self.in_GDR, "G-D": self.in_GD, "G-R": self.in_GR, "D-R": self.in_DR}


def region_label(in_gdr, in_gd, in_gr, in_dr) -> str:
    if in_dr:
        return "(i)"
    if in_gd:
        return "(ii)"
    if in_gdr:
        return "(iii)"
    if in_gr:
        return "(iv)"
    return "(v)"


def _collinear(lam: np.ndarray, tol: float) -> np.ndarray:
    v = np.swapaxes(lam, -1, -2)  # (..., d, n): rows are v_i
    norms = np.linalg.norm(v, axis=-1)
    live = norms > tol
    unit = np.where(live[..., None], v / np.where(live, norms, 1.0)[..., None], 0.0)
    # sigma_2 / sigma_1 of the stacked unit vectors is the sine of their spread,
    # the same scale as the amplitude tolerance used elsewhere
    few = np.sum(live, axis=-1) <= 1
    if v.shape[-1] == 1:  # one outcome: every v_i is a scalar
        return np.ones_like(few)
    sv = np.linalg.svd(unit, compute_uv=False)
    return few | (sv[..., 1] < tol * sv[..., 0])


def _equal_norms(lam: np.ndarray, lo: int, hi: int, tol: float) -> np.ndarray:
    norms = np.linalg.norm(lam[..., lo:hi], axis=-2)
    if norms.shape[-1] == 0:
        return np.ones(norms.shape[:-1], dtype=bool)
    return (np.max(norms, axis=-1) - np.min(norms, axis=-1)) <= tol


def venn_flags(lam: np.ndarray, tol: float = SATURATION_TOL) -> dict:
    """Basis-free membership flags for singular tables of shape ``(..., n, d)``.

    * G-D-R: all ``v_i`` collinear and ``|v_1| = ... = |v_{d-2}|``
    * G-D:   all ``v_i`` collinear and ``|v_1| = ... = |v_{d-1}|``
    * G-R:   every ``M_r^dagger M_r`` has the spectrum of ``a |j><j| + b 1``, ``a, b >= 0``,
      i.e. ``lam[r, 1] == lam[r, d-1]``
    * D-R:   every operator has rank at most one, or every operator is
      proportional to a unitary
    """
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[-1]
    collinear = _collinear(lam, tol)
    in_gdr = collinear & _equal_norms(lam, 1, d - 1, tol)
    in_gd = collinear & _equal_norms(lam, 1, d, tol)
    in_gr = np.all(lam[..., 1] - lam[..., -1] <= tol, axis=-1)
    rank_one = np.all(lam[..., 1] <= tol, axis=-1)
    flat = np.all(lam[..., 0] - lam[..., -1] <= tol, axis=-1)
    return {"in_GDR": in_gdr, "in_GD": in_gd, "in_GR": in_gr, "in_DR": rank_one | flat}


def _gr_strict(m: Measurement, tol: float) -> bool:
    for effect in m.effects():
        diag = np.real(np.diag(effect))
        if np.max(np.abs(effect - np.diag(diag))) > tol:
            return False
        mu = np.sqrt(np.clip(np.sort(diag)[::-1], 0.0, None))
        if mu[1] - mu[-1] > tol:
            return False
    return True


def _gr_from_effects(m: Measurement, tol: float) -> bool:
    for effect in m.effects():
        mu = np.sqrt(np.clip(np.linalg.eigvalsh(effect)[::-1], 0.0, None))
        if mu[1] - mu[-1] > tol:
            return False
    return True


def saturation_conditions(
    t: SingularTable,
    m: Measurement | None = None,
    tol: float = SATURATION_TOL,
    strict_basis: bool = False,
) -> VennRegion:
    """Classify a measurement by the algebraic saturation conditions.

    Parameters
    ----------
    t : SingularTable
        Singular values of the measurement operators.
    m : Measurement, optional
        When given, the gain-reversibility condition is tested on the
        eigenvalues of each ``M_r^dagger M_r``. With ``strict_basis`` the
        rank-one direction must also be a computational basis ket, i.e.
        every ``M_r^dagger M_r`` must be diagonal.
    """
    flags = {k: bool(v) for k, v in venn_flags(t.lam, tol).items()}
    if m is not None:
        flags["in_GR"] = _gr_strict(m, tol) if strict_basis else _gr_from_effects(m, tol)
    elif strict_basis:
        raise ValueError("strict basis check needs the measurement operators")
    label = region_label(flags["in_GDR"], flags["in_GD"], flags["in_GR"], flags["in_DR"])
    return VennRegion(region_label=label, **flags)


# -- batched certification ------------------------------------------------------


def certify(lam: np.ndarray, sat_tol: float = SATURATION_TOL) -> dict:
    """Evaluate every inequality for a batch of singular tables ``(B, n, d)``.

    Lemma 1 and Lemma 2 use the optimal reversal. Returns slack arrays
    (``rhs - lhs``) keyed by relation name, the Venn flags, and the
    deviation from the qubit identity ``2/3 - G = R/6`` when ``d = 2``.
    """
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[-1]
    gain = _gain(lam)
    fid = _op_fidelity(lam)
    rev = _reversibility(lam)
    overall = _overall_fidelity(lam, optimal_reversal_array(lam))
    out = {}
    for name, (lhs, rhs) in {
        "G-D": gd_sides(gain, fid, d),
        "G-R": gr_sides(gain, rev, d),
        "G-D-R": gdr_sides(gain, fid, rev, d),
        "D-R": dr_sides(rev, 1 - fid, d),
        "Lemma1": lemma1_sides(rev, overall, d),
        "Lemma2": (overall, fid),
    }.items():
        out[name] = rhs - lhs
    out["gap"] = gd_sides(gain, fid, d)[1] - gdr_sides(gain, fid, rev, d)[1]
    out["venn"] = venn_flags(lam, sat_tol)
    if d == 2:
        out["qubit_identity"] = np.abs((2 / 3 - gain) - rev / 6)
    return out


def venn_implication_violations(flags: dict) -> dict:
    """Counts of violations of ``GD => GDR and GR`` and ``GDR and GR => GD``."""
    gd, gdr, gr = (np.asarray(flags[k]) for k in ("in_GD", "in_GDR", "in_GR"))
    return {
        "GD=>GDR&GR": int(np.sum(gd & ~(gdr & gr))),
        "GDR&GR=>GD": int(np.sum(gdr & gr & ~gd)),
    }
