"""Builtin measurement families with closed-form information contents.

Every family is diagonal in the computational basis, so the closed forms
can be read off the operator entries. Indices ``i + k`` wrap modulo ``d``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import RangeError
from .measurement import Measurement
from .reversal import ReversalOperation

# p at which sqrt(p) stops being the largest singular value of the
# three-level cyclic family: the smaller root of p**2 - 7p + 3 = 0.
MAIN_TEXT_LOWER = 0.458619

FAMILY_NAMES = ("qubit_weak", "main_text", "vn_projective", "ex_ii", "ex_iii", "ex_iv", "ex_v")


@dataclass(frozen=True)
class CatalogFamily:
    """A one-parameter family of measurements.

    Attributes
    ----------
    name : str
    dim : int
    param_range : tuple of float
        Closed interval of valid parameters.
    builder : callable
        ``p -> Measurement``.
    expected : callable
        ``p -> {"G": ..., "F": ..., "R": ...}`` closed forms.
    expected_region : str
        Venn region label on the open interior of ``param_range``.
    reversal : callable
        ``p -> ReversalOperation``, the explicit optimal reversal.
    """

    name: str
    dim: int
    param_range: tuple[float, float]
    builder: Callable[[float], Measurement]
    expected: Callable[[float], dict]
    expected_region: str
    reversal: Callable[[float], ReversalOperation]

    def __call__(self, p: float) -> Measurement:
        return self.build(p)

    def check_param(self, p: float) -> float:
        lo, hi = self.param_range
        p = float(p)
        if not np.isfinite(p):
            raise RangeError(f"{self.name}: parameter must be finite")
        if p < lo - 1e-12 or p > hi + 1e-12:
            warnings.warn(
                f"{self.name}: parameter {p} outside [{lo}, {hi}]; closed forms may not apply",
                RuntimeWarning,
                stacklevel=3,
            )
        return p

    def build(self, p: float) -> Measurement:
        return self.builder(self.check_param(p))

    def expected_values(self, p: float) -> dict:
        return self.expected(self.check_param(p))

    def grid(self, steps: int = 50) -> np.ndarray:
        lo, hi = self.param_range
        return np.linspace(lo, hi, steps)


def _sqrt(x: float, what: str) -> float:
    if x < -1e-15:
        raise RangeError(f"{what} = {x} is negative")
    return float(np.sqrt(max(x, 0.0)))


def _cyclic(d: int, values, outcomes=None) -> np.ndarray:
    """Operators ``sum_k values[k] |i+k><i+k|`` for ``i`` in ``outcomes``."""
    outcomes = range(d) if outcomes is None else outcomes
    ops = []
    for i in outcomes:
        diag = np.zeros(d)
        for k, v in enumerate(values):
            diag[(i + k) % d] = v
        ops.append(np.diag(diag))
    return np.array(ops, dtype=np.complex128)


def _reversal(blocks, counts, completion="explicit") -> ReversalOperation:
    return ReversalOperation(tuple(np.array(b, dtype=np.complex128) for b in blocks), tuple(counts), completion)


def _no_success(d: int):
    return [np.eye(d)]


def _require_reversible(name: str, ok: bool, p: float) -> None:
    if not ok:
        raise RangeError(f"{name} at p={p} is completely irreversible; there is no success branch")


# -- qubit weak measurement --------------------------------------------------


def _qubit_weak(eta: float) -> Measurement:
    m1 = np.diag([0.0, _sqrt(eta, "eta")])
    m2 = np.diag([1.0, _sqrt(1 - eta, "1 - eta")])
    return Measurement(np.array([m1, m2]), label=f"qubit_weak eta={eta:g}")


def _qubit_weak_expected(eta: float) -> dict:
    return {"G": (3 + eta) / 6, "F": (2 + np.sqrt(1 - eta)) / 3, "R": 1 - eta}


def _qubit_weak_reversal(eta: float) -> ReversalOperation:
    _require_reversible("qubit_weak", eta < 1, eta)
    success = np.diag([_sqrt(1 - eta, "1 - eta"), 1.0])
    rest = np.diag([_sqrt(eta, "eta"), 0.0])
    return _reversal([_no_success(2), [success, rest]], [0, 1])


# -- three-level cyclic family with a tighter global bound --------------------


def _main_text_values(p: float):
    return (
        _sqrt(p, "p"),
        _sqrt((1 - p) * (3 - p) / 3, "(1-p)(3-p)/3"),
        _sqrt(p * (1 - p) / 3, "p(1-p)/3"),
    )


def _main_text(p: float) -> Measurement:
    return Measurement(_cyclic(3, _main_text_values(p)), label=f"main_text p={p:g}")


def _main_text_expected(p: float) -> dict:
    s = np.sqrt(p) + np.sqrt((1 - p) * (3 - p) / 3) + np.sqrt(p * (1 - p) / 3)
    return {"G": (1 + p) / 4, "F": 0.25 + s**2 / 4, "R": p * (1 - p)}


def _diagonal_reversal(values):
    """Success and completion diagonals for one diagonal operator."""
    values = np.asarray(values, dtype=float)
    lmin = values.min()
    success = lmin / values
    rest = np.sqrt(np.clip(1 - success**2, 0.0, None))
    return success, rest


def _main_text_reversal(p: float) -> ReversalOperation:
    vals = np.array(_main_text_values(p))
    _require_reversible("main_text", vals.min() > 0, p)
    success, rest = _diagonal_reversal(vals)
    blocks = [[s, r] for s, r in zip(_cyclic(3, success), _cyclic(3, rest))]
    return _reversal(blocks, [1, 1, 1])


# -- von Neumann measurement --------------------------------------------------


def _vn_builder(d: int):
    def build(p: float) -> Measurement:
        return Measurement(_cyclic(d, [1.0]), label=f"von Neumann d={d}")

    return build


def _vn_expected(d: int):
    def expected(p: float) -> dict:
        return {"G": 2 / (d + 1), "F": 2 / (d + 1), "R": 0.0}

    return expected


def _vn_reversal(d: int):
    def reversal(p: float) -> ReversalOperation:
        _require_reversible("vn_projective", False, p)

    return reversal


# -- example (ii): uniform partial collapse ------------------------------------


def _ex_ii(p: float) -> Measurement:
    q = _sqrt((1 - p) / 2, "(1-p)/2")
    return Measurement(_cyclic(3, [_sqrt(p, "p"), q, q]), label=f"ex_ii p={p:g}")


def _ex_ii_expected(p: float) -> dict:
    return {
        "G": (1 + p) / 4,
        "F": (3 - p + 2 * np.sqrt(2 * p * (1 - p))) / 4,
        "R": 3 * (1 - p) / 2,
    }


def _ex_ii_reversal(p: float) -> ReversalOperation:
    _require_reversible("ex_ii", p < 1, p)
    blocks = []
    for i in range(3):
        proj = np.zeros((3, 3))
        proj[i, i] = 1.0
        success = np.sqrt((1 - p) / (2 * p)) * proj + (np.eye(3) - proj)
        rest = np.sqrt((3 * p - 1) / (2 * p)) * proj
        blocks.append([success, rest])
    return _reversal(blocks, [1, 1, 1])


# -- example (iii): unequal partial collapse ----------------------------------


def _ex_iii(p: float) -> Measurement:
    vals = [_sqrt(p, "p"), _sqrt(2 * (1 - p) / 3, "2(1-p)/3"), _sqrt((1 - p) / 3, "(1-p)/3")]
    return Measurement(_cyclic(3, vals), label=f"ex_iii p={p:g}")


def _ex_iii_expected(p: float) -> dict:
    return {
        "G": (1 + p) / 4,
        "F": (3 + np.sqrt(2) * (1 - p) + (np.sqrt(3) + np.sqrt(6)) * np.sqrt(p * (1 - p))) / 6,
        "R": 1 - p,
    }


def _ex_iii_reversal(p: float) -> ReversalOperation:
    _require_reversible("ex_iii", p < 1, p)
    success = _cyclic(3, [np.sqrt((1 - p) / (3 * p)), np.sqrt(0.5), 1.0])
    rest = _cyclic(3, [np.sqrt((4 * p - 1) / (3 * p)), np.sqrt(0.5), 0.0])
    return _reversal([[s, r] for s, r in zip(success, rest)], [1, 1, 1])


# -- example (iv): gain-reversibility optimal only -----------------------------


def _ex_iv(p: float) -> Measurement:
    a, b = np.sqrt(1 / 3), _sqrt(p / 6, "p/6")
    ops = list(_cyclic(3, [a, b, b], outcomes=(0, 1)))
    c, e = _sqrt((3 - p) / 3, "(3-p)/3"), _sqrt((4 - p) / 6, "(4-p)/6")
    ops.append(np.diag([e, e, c]).astype(np.complex128))
    return Measurement(np.array(ops), label=f"ex_iv p={p:g}")


def _ex_iv_expected(p: float) -> dict:
    return {
        "G": (14 - p) / 36,
        "F": (22 + p + 4 * np.sqrt(2 * p) + 2 * np.sqrt(6 - 2 * p) * np.sqrt(4 - p)) / 36,
        "R": (4 + p) / 6,
    }


def _ex_iv_reversal(p: float) -> ReversalOperation:
    blocks, counts = [], []
    for i in (0, 1):
        if p <= 0:
            blocks.append(_no_success(3))
            counts.append(0)
            continue
        success = _cyclic(3, [np.sqrt(p / 2), 1.0, 1.0], outcomes=(i,))[0]
        # (2 - p)/2 rather than (1 - p)/2: the latter leaves the reversal incomplete
        rest = _cyclic(3, [np.sqrt((2 - p) / 2), 0.0, 0.0], outcomes=(i,))[0]
        blocks.append([success, rest])
        counts.append(1)
    success = np.diag([1.0, 1.0, np.sqrt((4 - p) / (2 * (3 - p)))])
    rest = np.diag([0.0, 0.0, np.sqrt((2 - p) / (2 * (3 - p)))])
    blocks.append([success, rest])
    counts.append(1)
    return _reversal(blocks, counts)


# -- example (v): non-optimal weak measurement --------------------------------


def _ex_v(p: float) -> Measurement:
    m1 = np.diag([0.0, _sqrt(p, "p"), 0.0])
    m2 = np.diag([1.0, _sqrt(1 - p, "1-p"), 1.0])
    return Measurement(np.array([m1, m2]), label=f"ex_v p={p:g}")


def _ex_v_expected(p: float) -> dict:
    return {"G": (4 + p) / 12, "F": (2 + np.sqrt(1 - p)) / 3, "R": 1 - p}


def _ex_v_reversal(p: float) -> ReversalOperation:
    _require_reversible("ex_v", p < 1, p)
    q = np.sqrt(1 - p)
    success = np.diag([q, 1.0, q])
    rest = np.diag([np.sqrt(p), 0.0, np.sqrt(p)])
    return _reversal([_no_success(3), [success, rest]], [0, 1])


def family(name: str, dim: int | None = None) -> CatalogFamily:
    """Look up a builtin family.

    ``dim`` only applies to ``vn_projective`` (default 3); the other
    families have a fixed dimension.
    """
    if name == "vn_projective":
        d = 3 if dim is None else int(dim)
        if d < 2:
            raise ValueError("vn_projective needs dim >= 2")
        return CatalogFamily(name, d, (0.0, 1.0), _vn_builder(d), _vn_expected(d), "(i)", _vn_reversal(d))
    table = {
        "qubit_weak": (2, (0.0, 1.0), _qubit_weak, _qubit_weak_expected, "(iv)", _qubit_weak_reversal),
        "main_text": (3, (MAIN_TEXT_LOWER, 1.0), _main_text, _main_text_expected, "(iii)", _main_text_reversal),
        "ex_ii": (3, (1 / 3, 1.0), _ex_ii, _ex_ii_expected, "(ii)", _ex_ii_reversal),
        "ex_iii": (3, (0.4, 1.0), _ex_iii, _ex_iii_expected, "(iii)", _ex_iii_reversal),
        "ex_iv": (3, (0.0, 1.0), _ex_iv, _ex_iv_expected, "(iv)", _ex_iv_reversal),
        "ex_v": (3, (0.0, 1.0), _ex_v, _ex_v_expected, "(v)", _ex_v_reversal),
    }
    if name not in table:
        raise KeyError(f"unknown family {name!r}; choose from {', '.join(FAMILY_NAMES)}")
    d, rng, build, expected, region, rev = table[name]
    if dim is not None and int(dim) != d:
        raise ValueError(f"family {name} has fixed dimension {d}")
    return CatalogFamily(name, d, rng, build, expected, region, rev)


def reversal_for(name: str, p: float) -> ReversalOperation:
    """Explicit optimal reversal of a family member.

    Raises
    ------
    RangeError
        When no outcome can be reversed at ``p``.
    """
    fam = family(name)
    return fam.reversal(fam.check_param(p))


def all_families() -> list[CatalogFamily]:
    return [family(n) for n in FAMILY_NAMES]
