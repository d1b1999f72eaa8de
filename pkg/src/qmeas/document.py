"""Reading and writing measurement documents.

A document is JSON. Every matrix is a list of rows and every entry an
explicit ``[re, im]`` pair::

    {
      "dim": 2,
      "label": "weak qubit measurement",
      "tolerance": 1e-8,
      "operators": [
        [[[0, 0], [0, 0]], [[0, 0], [0.707, 0]]],
        ...
      ],
      "reversal": {
        "success_count": [0, 1],
        "operators": [[<matrix>], [<matrix>, <matrix>]]
      }
    }

``tolerance`` (completeness) and ``reversal`` are optional. In a template
document the entries may also be strings holding expressions in ``p``,
for example ``["sqrt(1 - p)", 0]``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .measurement import COMPLETENESS_TOL, Measurement, check_measurement
from .reversal import ReversalOperation


class DocumentError(ValueError):
    """Malformed document; the message says where."""


_ALLOWED_NAMES = {"p", "sqrt", "pi", "sin", "cos", "exp", "log", "I", "E"}
_TOKEN = re.compile(r"[A-Za-z_]\w*")
_CHARS = re.compile(r"^[\w\s.+\-*/()^,]*$")


def _expression(text: str, where: str):
    """Compile a template entry into a function of ``p``."""
    import sympy

    if not _CHARS.match(text) or set(_TOKEN.findall(text)) - _ALLOWED_NAMES:
        raise DocumentError(f"{where}: unsupported expression {text!r}")
    try:
        expr = sympy.sympify(text.replace("^", "**"), locals={"p": sympy.Symbol("p")})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise DocumentError(f"{where}: cannot parse expression {text!r}: {exc}") from None
    return sympy.lambdify(sympy.Symbol("p"), expr, modules="numpy")


def _entry(value, where: str, template: bool):
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise DocumentError(f"{where}: expected a number, got {type(value).__name__}")
    if isinstance(value, str):
        if not template:
            raise DocumentError(f"{where}: expressions are only allowed in templates")
        return _expression(value, where)
    return float(value)


def _matrix(raw, dim: int, where: str, template: bool):
    if not isinstance(raw, list) or len(raw) != dim:
        n = len(raw) if isinstance(raw, list) else type(raw).__name__
        raise DocumentError(f"{where}: expected {dim} rows, got {n}")
    out = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != dim:
            n = len(row) if isinstance(row, list) else type(row).__name__
            raise DocumentError(f"{where}, row {i}: expected {dim} entries, got {n}")
        cells = []
        for j, cell in enumerate(row):
            here = f"{where}, row {i}, column {j}"
            if not isinstance(cell, list) or len(cell) != 2:
                raise DocumentError(f"{here}: entries must be [re, im] pairs, got {cell!r}")
            cells.append((_entry(cell[0], here, template), _entry(cell[1], here, template)))
        out.append(cells)
    return out


def _evaluate(cells, p: float | None) -> np.ndarray:
    def value(x):
        return complex(x(p)) if callable(x) else x

    return np.array([[value(re) + 1j * value(im) for re, im in row] for row in cells])


@dataclass
class MeasurementDocument:
    """Parsed document; numeric entries may be deferred callables in templates."""

    dim: int
    operators: list
    label: str = ""
    tolerance: float = COMPLETENESS_TOL
    reversal_operators: list | None = None
    success_counts: tuple | None = None
    is_template: bool = False

    def measurement(self, p: float | None = None, check: bool = True) -> Measurement:
        """Build the measurement, substituting ``p`` into template entries."""
        if self.is_template and p is None:
            raise DocumentError("template document needs a parameter value")
        ops = np.array([_evaluate(m, p) for m in self.operators])
        m = Measurement(ops, label=self.label)
        return check_measurement(m, self.tolerance) if check else m

    def reversal(self, p: float | None = None) -> ReversalOperation | None:
        if self.reversal_operators is None:
            return None
        blocks = tuple(np.array([_evaluate(m, p) for m in block]) for block in self.reversal_operators)
        return ReversalOperation(blocks, self.success_counts, completion="user")


def _parse_reversal(raw, dim: int, n: int, template: bool):
    if not isinstance(raw, dict) or "operators" not in raw:
        raise DocumentError("reversal: expected an object with an 'operators' list")
    blocks = raw["operators"]
    if not isinstance(blocks, list) or len(blocks) != n:
        raise DocumentError(f"reversal: expected {n} operator groups, one per outcome")
    parsed = []
    for r, block in enumerate(blocks):
        if not isinstance(block, list) or not block:
            raise DocumentError(f"reversal, outcome {r}: expected a non-empty list of matrices")
        parsed.append([_matrix(m, dim, f"reversal, outcome {r}, operator {l}", template) for l, m in enumerate(block)])
    counts = raw.get("success_count", 1)
    if isinstance(counts, int) and not isinstance(counts, bool):
        counts = [counts] * n
    if not isinstance(counts, list) or len(counts) != n or not all(isinstance(c, int) for c in counts):
        raise DocumentError("reversal: success_count must be an integer or one integer per outcome")
    for r, c in enumerate(counts):
        if c not in (0, 1) or c > len(parsed[r]):
            raise DocumentError(f"reversal, outcome {r}: success_count {c} is not supported")
    return parsed, tuple(counts)


def parse_document(text: str, template: bool = False) -> MeasurementDocument:
    """Parse document text.

    Raises
    ------
    DocumentError
        With the line and column for syntax errors, and the operator, row
        and column index for schema errors.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise DocumentError("top level must be an object")
    dim = raw.get("dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise DocumentError(f"'dim' must be a positive integer, got {dim!r}")
    ops = raw.get("operators")
    if not isinstance(ops, list) or not ops:
        raise DocumentError("'operators' must be a non-empty list of matrices")
    is_template = template or bool(raw.get("template", False))
    parsed = [_matrix(m, dim, f"operator {k}", is_template) for k, m in enumerate(ops)]
    label = raw.get("label", "")
    if not isinstance(label, str):
        raise DocumentError("'label' must be a string")
    tol = raw.get("tolerance", COMPLETENESS_TOL)
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or tol <= 0:
        raise DocumentError(f"'tolerance' must be a positive number, got {tol!r}")
    rev, counts = (None, None)
    if "reversal" in raw:
        rev, counts = _parse_reversal(raw["reversal"], dim, len(parsed), is_template)
    return MeasurementDocument(dim, parsed, label, float(tol), rev, counts, is_template)


def load_document(path, template: bool = False) -> MeasurementDocument:
    return parse_document(Path(path).read_text(encoding="utf-8"), template)


def _pairs(mat: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat, dtype=np.complex128)]


def to_document(m: Measurement, rev: ReversalOperation | None = None, tolerance: float | None = None) -> dict:
    """Serializable form of a measurement (and optional reversal)."""
    doc = {"dim": m.dim, "label": m.label, "operators": [_pairs(op) for op in m.operators]}
    if tolerance is not None:
        doc["tolerance"] = tolerance
    if rev is not None:
        doc["reversal"] = {
            "success_count": list(rev.success_counts),
            "operators": [[_pairs(op) for op in block] for block in rev.per_outcome],
        }
    return doc


def dumps(m: Measurement, rev: ReversalOperation | None = None, tolerance: float | None = None) -> str:
    return json.dumps(to_document(m, rev, tolerance), indent=1)
