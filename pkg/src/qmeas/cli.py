"""Command-line front end (``qmeas``).

Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings

import numpy as np

from . import catalog
from .document import DocumentError, dumps, load_document
from .errors import NumericError, QMeasError
from .info import info_contents, overall_fidelity
from .linalg import singular_values
from .measurement import (
    COMPLETENESS_TOL,
    Measurement,
    canonicalize,
    completeness_residual,
    positive_frame,
    random_measurement_operators,
    singular_table,
)
from .oracle import (
    exact_estimation_fidelity,
    exact_operation_fidelity,
    exact_overall_fidelity,
    exact_reversibility,
    mc_average,
)
from .reversal import (
    optimal_reversal,
    optimal_reversal_table,
    success_amplitude,
    success_residuals,
)
from .tradeoff import (
    SATURATION_TOL,
    all_reports,
    certify,
    check_lemma1,
    check_lemma2,
    gd_sides,
    gdr_sides,
    saturation_conditions,
    venn_implication_violations,
)

SWEEP_HEADER = [
    "param", "G", "F", "D", "R",
    "gd_slack", "gr_slack", "gdr_slack", "dr_slack",
    "gd_sat", "gr_sat", "gdr_sat", "dr_sat",
    "region", "rhs_gd", "rhs_gdr",
]

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("QMEAS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"QMEAS_SEED must be an integer, got {env!r}") from None
    return 0


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _yes(flag: bool) -> str:
    return "yes" if flag else "no"


def _load_measurement(args) -> tuple[Measurement, object]:
    """Measurement and optional document reversal from a file or a family."""
    if getattr(args, "family", None):
        fam = catalog.family(args.family)
        if args.param is None:
            raise UsageError("--family needs --param")
        return fam.build(args.param), None
    if not getattr(args, "file", None):
        raise UsageError("give a measurement document or --family/--param")
    doc = load_document(args.file)
    tol = args.tol_complete if args.tol_complete is not None else doc.tolerance
    doc.tolerance = tol
    return doc.measurement(), doc.reversal()


# -- analyze / classify -----------------------------------------------------


def _oracle_rows(m: Measurement, t, kind: str, samples: int, seed: int) -> list[dict]:
    cm = canonicalize(m)
    rev = optimal_reversal(cm)
    info = info_contents(t)
    f_rm = overall_fidelity(t, optimal_reversal_table(t))
    analytic = {"G": info.gain, "F": info.op_fidelity, "F(R o M)": f_rm, "R": info.reversibility}
    rows = []
    if kind == "exact":
        values = {
            "G": exact_estimation_fidelity(m),
            "F": exact_operation_fidelity(positive_frame(m)),
            "F(R o M)": exact_overall_fidelity(m, rev),
            "R": exact_reversibility(m, rev),
        }
    else:
        rng = np.random.default_rng(seed)
        values = {
            "G": mc_average("gain", m, n_samples=samples, rng=rng),
            "F": mc_average("op_fidelity", positive_frame(m), n_samples=samples, rng=rng),
            "F(R o M)": mc_average("overall_fidelity", m, rev, n_samples=samples, rng=rng),
            "R": mc_average("reversibility", m, rev, n_samples=samples, rng=rng),
        }
    for name, est in values.items():
        rows.append(
            {
                "quantity": name,
                "analytic": analytic[name],
                "oracle": est.value,
                "std_error": est.std_error,
                "diff": abs(est.value - analytic[name]),
                "agrees": est.agrees_with(analytic[name]) if kind == "mc" else abs(est.value - analytic[name]) < 1e-10,
            }
        )
    return rows


def _analysis(m: Measurement, user_rev, args) -> dict:
    t = singular_table(m, args.tol_complete or COMPLETENESS_TOL)
    info = info_contents(t)
    venn = saturation_conditions(t, m, args.tol_sat, strict_basis=args.strict_basis)
    out = {
        "label": m.label,
        "dim": m.dim,
        "outcomes": m.n_outcomes,
        "completeness_residual": completeness_residual(m),
        "venn": venn,
    }
    if args.classify_only:
        return out
    rt = optimal_reversal_table(t)
    f_rm = overall_fidelity(t, rt)
    reports = all_reports(info, sat_tol=args.tol_sat)
    reports.append(check_lemma1(info, f_rm, t, rt, sat_tol=args.tol_sat))
    reports.append(check_lemma2(f_rm, info.op_fidelity, args.tol_sat))
    cm = canonicalize(m)
    rev = optimal_reversal(cm)
    residuals = success_residuals(rev, m)
    summary = []
    for r in range(m.n_outcomes):
        amp = success_amplitude(rev, cm, r) if rev.success_counts[r] else 0.0
        summary.append({"outcome": r, "lambda_min": float(t.lam[r, -1]), "success_amplitude": amp,
                        "success_residual": float(residuals[r])})
    out.update(info=info, overall_fidelity=f_rm, reports=reports, reversal=summary,
               reversal_completeness=float(np.max(rev.completeness_residuals())))
    if user_rev is not None:
        f_user = exact_overall_fidelity(m, user_rev).value
        out["user_reversal"] = {
            "completeness_residual": float(np.max(user_rev.completeness_residuals())),
            "success_residual": float(np.max(success_residuals(user_rev, m))),
            "reversibility": exact_reversibility(m, user_rev).value,
            "overall_fidelity": f_user,
            "lemma2": check_lemma2(f_user, info.op_fidelity, args.tol_sat),
        }
    if args.oracle:
        out["oracle"] = _oracle_rows(m, t, args.oracle, args.samples, _seed(args))
    return out


def _jsonable(out: dict) -> dict:
    res = {k: v for k, v in out.items() if k not in ("venn", "info", "reports", "user_reversal")}
    v = out["venn"]
    res["region"] = v.region_label
    res["memberships"] = v.memberships()
    if "info" in out:
        res["info"] = out["info"].as_dict()
        res["reports"] = [
            {"name": r.name, "lhs": r.lhs, "rhs": r.rhs, "slack": r.slack, "satisfied": r.satisfied,
             "saturated": r.saturated, "equality_condition": r.equality_condition}
            for r in out["reports"]
        ]
    if "user_reversal" in out:
        u = dict(out["user_reversal"])
        lem = u.pop("lemma2")
        u["lemma2_slack"] = lem.slack
        u["lemma2_satisfied"] = lem.satisfied
        res["user_reversal"] = u
    return res


def _print_analysis(out: dict, stream) -> None:
    w = stream.write
    v = out["venn"]
    w(f"measurement: {out['label'] or '(unlabeled)'}  d={out['dim']}  outcomes={out['outcomes']}  "
      f"completeness residual {out['completeness_residual']:.3e}\n")
    if "info" in out:
        info = out["info"]
        w("information contents\n")
        for key, val in (("G", info.gain), ("F", info.op_fidelity), ("D", info.disturbance),
                         ("R", info.reversibility), ("F(R o M)", out["overall_fidelity"])):
            w(f"  {key:<9}{val:.12f}\n")
        w("trade-off relations (lhs <= rhs)\n")
        for r in out["reports"]:
            extra = ""
            if r.equality_condition is not None:
                extra = f"  equality condition {'holds' if r.equality_condition else 'fails'}"
            w(f"  {r}{extra}\n")
    mem = ", ".join(f"{k}: {_yes(val)}" for k, val in v.memberships().items())
    w(f"Venn region: {v.region_label}  [{mem}]\n")
    if "reversal" in out:
        w(f"optimal reversal (completeness residual {out['reversal_completeness']:.3e})\n")
        for row in out["reversal"]:
            w(f"  outcome {row['outcome']}: lambda_min={row['lambda_min']:.12f}  "
              f"success amplitude={row['success_amplitude']:.12f}  residual={row['success_residual']:.3e}\n")
    if "user_reversal" in out:
        u = out["user_reversal"]
        w("supplied reversal\n")
        w(f"  completeness residual {u['completeness_residual']:.3e}  success residual {u['success_residual']:.3e}\n")
        w(f"  reversibility {u['reversibility']:.12f}  overall fidelity {u['overall_fidelity']:.12f}\n")
        w(f"  {u['lemma2']}\n")
    if "oracle" in out:
        w("oracle cross-check\n")
        w(f"  {'quantity':<10}{'analytic':>18}{'oracle':>18}{'std err':>12}{'|diff|':>12}\n")
        for row in out["oracle"]:
            w(f"  {row['quantity']:<10}{row['analytic']:>18.12f}{row['oracle']:>18.12f}"
              f"{row['std_error']:>12.3e}{row['diff']:>12.3e}{'' if row['agrees'] else '  DISAGREES'}\n")
        w(f"  max |diff| = {max(r['diff'] for r in out['oracle']):.3e}\n")


def cmd_analyze(args, stream) -> int:
    m, user_rev = _load_measurement(args)
    out = _analysis(m, user_rev, args)
    if args.json:
        stream.write(json.dumps(_jsonable(out), indent=1) + "\n")
    else:
        _print_analysis(out, stream)
    if "oracle" in out and not all(r["agrees"] for r in out["oracle"]):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_classify(args, stream) -> int:
    args.classify_only = True
    args.oracle = None
    return cmd_analyze(args, stream)


# -- sweep --------------------------------------------------------------------


def sweep_rows(build, params, tol_complete: float = COMPLETENESS_TOL, tol_sat: float = SATURATION_TOL,
               strict_basis: bool = False) -> list[dict]:
    """One row of information contents, slacks and flags per parameter value."""
    rows = []
    for p in params:
        m = build(float(p))
        t = singular_table(m, tol_complete)
        info = info_contents(t)
        gd, gr, gdr, dr = all_reports(info, sat_tol=tol_sat)
        venn = saturation_conditions(t, m, tol_sat, strict_basis=strict_basis)
        rows.append(
            {
                "param": float(p), "G": info.gain, "F": info.op_fidelity, "D": info.disturbance,
                "R": info.reversibility,
                "gd_slack": gd.slack, "gr_slack": gr.slack, "gdr_slack": gdr.slack, "dr_slack": dr.slack,
                "gd_sat": gd.saturated, "gr_sat": gr.saturated, "gdr_sat": gdr.saturated, "dr_sat": dr.saturated,
                "region": venn.region_label, "rhs_gd": gd.rhs, "rhs_gdr": gdr.rhs,
            }
        )
    return rows


def write_sweep_csv(rows: list[dict], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for row in rows:
        cells = []
        for key in SWEEP_HEADER:
            val = row[key]
            if isinstance(val, (bool, np.bool_)):
                cells.append("true" if val else "false")
            elif isinstance(val, str):
                cells.append(val)
            else:
                cells.append(_fmt(val))
        writer.writerow(cells)


def cmd_sweep(args, stream) -> int:
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    if args.family:
        fam = catalog.family(args.family, args.dim)
        lo, hi = args.range if args.range else fam.param_range
        build = fam.build
    elif args.template:
        if not args.range:
            raise UsageError("--template needs --range LO HI")
        doc = load_document(args.template, template=True)
        if args.tol_complete is not None:
            doc.tolerance = args.tol_complete
        lo, hi = args.range

        def build(p):
            return doc.measurement(p)
    else:
        raise UsageError("give --family or --template")
    if not hi > lo:
        raise UsageError(f"empty range [{lo}, {hi}]")
    params = np.linspace(lo, hi, args.steps)
    rows = sweep_rows(build, params, args.tol_complete or COMPLETENESS_TOL, args.tol_sat, args.strict_basis)
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_sweep_csv(rows, fh)
        stream.write(f"wrote {len(rows)} rows to {args.output}\n")
    else:
        write_sweep_csv(rows, stream)
    return EXIT_OK


# -- audit --------------------------------------------------------------------

AUDIT_RELATIONS = ("G-D", "G-R", "G-D-R", "D-R", "Lemma1", "Lemma2")


def audit(d: int, n: int, count: int, seed: int, tol: float = 1e-10, sat_tol: float = SATURATION_TOL,
          batch: int = 2000) -> dict:
    """Certify every relation on ``count`` random measurements."""
    if d < 2 or n < 1 or count < 1:
        raise UsageError("audit needs dim >= 2, outcomes >= 1 and count >= 1")
    rng = np.random.default_rng(seed)
    mins = {k: np.inf for k in AUDIT_RELATIONS}
    violations = {k: 0 for k in AUDIT_RELATIONS}
    venn_viol = {"GD=>GDR&GR": 0, "GDR&GR=>GD": 0}
    identity = 0.0
    gap_min = np.inf
    done = 0
    while done < count:
        size = min(batch, count - done)
        ops = random_measurement_operators(d, n, size, rng)
        res = certify(singular_values(ops), sat_tol)
        for k in AUDIT_RELATIONS:
            mins[k] = min(mins[k], float(np.min(res[k])))
            violations[k] += int(np.sum(res[k] < -tol))
        for k, v in venn_implication_violations(res["venn"]).items():
            venn_viol[k] += v
        gap_min = min(gap_min, float(np.min(res["gap"])))
        if d == 2:
            identity = max(identity, float(np.max(res["qubit_identity"])))
        done += size
    out = {"dim": d, "outcomes": n, "count": count, "seed": seed, "min_slack": mins, "violations": violations,
           "venn_violations": venn_viol, "min_gap_gd_minus_gdr": gap_min}
    if d == 2:
        out["max_qubit_identity_deviation"] = identity
    return out


def _print_audit(res: dict, stream) -> None:
    w = stream.write
    w(f"audit: d={res['dim']} outcomes={res['outcomes']} count={res['count']} seed={res['seed']}\n")
    w(f"  {'relation':<8}{'min slack':>16}{'violations':>12}\n")
    for k in AUDIT_RELATIONS:
        w(f"  {k:<8}{res['min_slack'][k]:>16.6e}{res['violations'][k]:>12d}\n")
    for k, v in res["venn_violations"].items():
        w(f"  set implication {k}: {v} violations\n")
    w(f"  min rhs gap (G-D minus G-D-R): {res['min_gap_gd_minus_gdr']:.6e}\n")
    if "max_qubit_identity_deviation" in res:
        w(f"  max |(2/3 - G) - R/6|: {res['max_qubit_identity_deviation']:.3e}\n")
    total = sum(res["violations"].values()) + sum(res["venn_violations"].values())
    w(f"  total violations: {total}\n")


def cmd_audit(args, stream) -> int:
    res = audit(args.dim, args.outcomes, args.count, _seed(args), sat_tol=args.tol_sat)
    if args.json:
        stream.write(json.dumps(res, indent=1, sort_keys=True) + "\n")
    else:
        _print_audit(res, stream)
    total = sum(res["violations"].values()) + sum(res["venn_violations"].values())
    return EXIT_OK if total == 0 else EXIT_NUMERIC


# -- oracle-check / export -----------------------------------------------------


def cmd_oracle_check(args, stream) -> int:
    m, _ = _load_measurement(args)
    t = singular_table(m, args.tol_complete or COMPLETENESS_TOL)
    ok = True
    for kind in ("exact", "mc"):
        rows = _oracle_rows(m, t, kind, args.samples, _seed(args))
        stream.write(f"{'exact Schur' if kind == 'exact' else f'Monte Carlo ({args.samples} samples)'}\n")
        for row in rows:
            flag = "ok" if row["agrees"] else "DISAGREES"
            stream.write(f"  {row['quantity']:<10} analytic {row['analytic']:.12f}  oracle {row['oracle']:.12f}"
                         f"  std err {row['std_error']:.2e}  |diff| {row['diff']:.2e}  {flag}\n")
            ok &= bool(row["agrees"])
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_export(args, stream) -> int:
    fam = catalog.family(args.family, args.dim)
    m = fam.build(args.param)
    rev = fam.reversal(args.param) if args.with_reversal else None
    text = dumps(m, rev) + "\n"
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stream.write(text)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def _add_common(p, with_oracle: bool = True) -> None:
    p.add_argument("file", nargs="?", help="measurement document (JSON)")
    p.add_argument("--family", choices=catalog.FAMILY_NAMES, help="use a builtin family instead of a file")
    p.add_argument("--param", type=float, help="family parameter")
    p.add_argument("--tol-complete", type=float, default=None, help="completeness tolerance (default 1e-8)")
    p.add_argument("--tol-sat", type=float, default=SATURATION_TOL, help="saturation tolerance (default 1e-8)")
    p.add_argument("--strict-basis", action="store_true", help="G-R condition must hold in the computational basis")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to QMEAS_SEED, then 0)")
    if with_oracle:
        p.add_argument("--oracle", choices=("exact", "mc"), default=None, help="cross-check against an oracle")
        p.add_argument("--samples", type=int, default=100_000, help="Monte Carlo samples")
        p.add_argument("--classify-only", action="store_true", help="only report the Venn region")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qmeas", description="Information gain, disturbance and reversibility of measurements.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="information contents, trade-off relations and Venn region")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("classify", help="Venn region only (same as analyze --classify-only)")
    _add_common(p, with_oracle=False)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", help="CSV of contents and slacks over a parameter grid")
    p.add_argument("--family", choices=catalog.FAMILY_NAMES)
    p.add_argument("--template", help="template document with entries depending on p")
    p.add_argument("--dim", type=int, default=None, help="dimension for vn_projective")
    p.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--output", "-o", default=None, help="CSV path (default stdout)")
    p.add_argument("--tol-complete", type=float, default=None)
    p.add_argument("--tol-sat", type=float, default=SATURATION_TOL)
    p.add_argument("--strict-basis", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("audit", help="certify all relations on random measurements")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--outcomes", type=int, required=True)
    p.add_argument("--count", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol-sat", type=float, default=SATURATION_TOL)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("oracle-check", help="compare closed forms with exact and Monte Carlo oracles")
    _add_common(p, with_oracle=False)
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("export", help="write a family member as a measurement document")
    p.add_argument("--family", choices=catalog.FAMILY_NAMES, required=True)
    p.add_argument("--param", type=float, required=True)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--with-reversal", action="store_true")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args, stdout)
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except NumericError as exc:
        stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (DocumentError, QMeasError, KeyError, ValueError, OSError) as exc:
        stderr.write(f"invalid input: {exc}\n")
        return EXIT_INPUT


def run(argv) -> tuple[int, str, str]:
    """Run the CLI in-process and capture its output."""
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


if __name__ == "__main__":
    sys.exit(main())
