import csv
import io
import json

import numpy as np
import pytest

from qmeas.catalog import family
from qmeas.cli import SWEEP_HEADER, audit, main, run
from qmeas.document import dumps


@pytest.fixture
def ex_ii_doc(tmp_path):
    path = tmp_path / "ex_ii.json"
    path.write_text(dumps(family("ex_ii").build(0.5)))
    return str(path)


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_analyze_ex_ii_document(ex_ii_doc):
    code, out, _ = run(["analyze", ex_ii_doc])
    assert code == 0
    assert "Venn region: (ii)" in out
    for name in ("G-D ", "G-R ", "G-D-R "):
        line = next(l for l in out.splitlines() if l.strip().startswith(name.strip() + " "))
        assert line.endswith("saturated"), line


def test_analyze_json_output(ex_ii_doc):
    code, out, _ = run(["analyze", ex_ii_doc, "--json"])
    data = json.loads(out)
    assert code == 0
    assert data["region"] == "(ii)"
    assert data["memberships"] == {"G-D-R": True, "G-D": True, "G-R": True, "D-R": False}
    assert data["info"]["R"] == pytest.approx(0.75)
    sat = {r["name"]: r["saturated"] for r in data["reports"]}
    assert sat["G-D"] and sat["G-D-R"] and sat["G-R"] and not sat["D-R"]


def test_analyze_exact_oracle(ex_ii_doc):
    code, out, _ = run(["analyze", ex_ii_doc, "--oracle", "exact", "--json"])
    rows = json.loads(out)["oracle"]
    assert code == 0
    assert max(r["diff"] for r in rows) < 1e-10


def test_analyze_mc_oracle_is_seeded():
    args = ["analyze", "--family", "ex_iii", "--param", "0.6", "--oracle", "mc", "--samples", "5000", "--json"]
    a = run(args + ["--seed", "4"])
    b = run(args + ["--seed", "4"])
    assert a == b and a[0] == 0


def test_seed_falls_back_to_environment(monkeypatch):
    args = ["analyze", "--family", "ex_iii", "--param", "0.6", "--oracle", "mc", "--samples", "5000", "--json"]
    monkeypatch.setenv("QMEAS_SEED", "9")
    env = run(args)
    assert env == run(args + ["--seed", "9"])
    monkeypatch.setenv("QMEAS_SEED", "x")
    assert run(args)[0] == 1


def test_analyze_with_supplied_reversal(tmp_path):
    path = tmp_path / "rev.json"
    m = family("qubit_weak").build(0.36)
    from qmeas.catalog import reversal_for

    path.write_text(dumps(m, reversal_for("qubit_weak", 0.36)))
    code, out, _ = run(["analyze", str(path), "--json"])
    user = json.loads(out)["user_reversal"]
    assert code == 0
    assert user["reversibility"] == pytest.approx(0.64)
    assert user["lemma2_satisfied"]


def test_malformed_row_exits_with_operator_index(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dim": 2, "operators": [[[[1, 0], [0, 0]], [[0, 0]]]]}))
    code, _, err = run(["analyze", str(path)])
    assert code == 1
    assert "operator 0, row 1" in err


def test_incomplete_measurement_reports_residual(tmp_path):
    path = tmp_path / "inc.json"
    path.write_text(json.dumps({"dim": 1, "operators": [[[[0.5, 0]]]]}))
    code, _, err = run(["analyze", str(path)])
    assert code == 1 and "residual" in err


def test_missing_file_and_usage_errors():
    assert run(["analyze", "/nonexistent/file.json"])[0] == 1
    assert run(["analyze"])[0] == 1
    assert run(["analyze", "--family", "ex_ii"])[0] == 1
    assert run(["frobnicate"])[0] == 1
    assert run(["audit", "--dim", "1", "--outcomes", "2"])[0] == 1


def test_classify(ex_ii_doc):
    code, out, _ = run(["classify", ex_ii_doc])
    assert code == 0
    assert "Venn region: (ii)" in out and "trade-off" not in out
    code, out, _ = run(["classify", "--family", "ex_iv", "--param", "0.5"])
    assert "(iv)" in out
    code, out, _ = run(["analyze", "--family", "ex_v", "--param", "0.5", "--classify-only"])
    assert "(v)" in out


def test_strict_basis_flag(tmp_path):
    from qmeas.linalg import haar_unitary
    from qmeas.measurement import Measurement

    u = haar_unitary(3, np.random.default_rng(0))
    m = family("ex_iv").build(0.5)
    rotated = Measurement(np.array([u @ op @ u.conj().T for op in m.operators]))
    path = tmp_path / "rot.json"
    path.write_text(dumps(rotated))
    assert "(iv)" in run(["classify", str(path)])[1]
    assert "(v)" in run(["classify", str(path), "--strict-basis"])[1]


def test_sweep_main_text():
    code, out, _ = run(["sweep", "--family", "main_text", "--range", "0.458619", "1", "--steps", "100"])
    rows = _csv(out)
    assert code == 0
    assert list(rows[0].keys()) == SWEEP_HEADER
    assert len(rows) == 100
    for row in rows[1:-1]:
        assert row["gdr_sat"] == "true" and row["gd_sat"] == "false"
        assert float(row["rhs_gdr"]) < float(row["rhs_gd"])
        assert row["region"] == "(iii)"


def test_sweep_ex_v_has_no_saturation_on_interior():
    rows = _csv(run(["sweep", "--family", "ex_v", "--range", "0.01", "1", "--steps", "20"])[1])
    for row in rows:
        assert all(row[k] == "false" for k in ("gd_sat", "gr_sat", "gdr_sat", "dr_sat"))


def test_sweep_to_file_and_validation(tmp_path):
    out = tmp_path / "s.csv"
    code, msg, _ = run(["sweep", "--family", "ex_ii", "--steps", "5", "--output", str(out)])
    assert code == 0 and "5 rows" in msg
    text = out.read_text()
    assert text.splitlines()[0] == ",".join(SWEEP_HEADER)
    assert "," not in text.splitlines()[1].split(",")[0]
    assert run(["sweep", "--family", "ex_ii", "--steps", "1"])[0] == 1
    assert run(["sweep", "--family", "ex_ii", "--range", "0.5", "0.5"])[0] == 1
    assert run(["sweep", "--steps", "3"])[0] == 1


def test_sweep_template(tmp_path):
    tpl = {
        "dim": 2,
        "template": True,
        "operators": [
            [[[0, 0], [0, 0]], [[0, 0], ["sqrt(p)", 0]]],
            [[[1, 0], [0, 0]], [[0, 0], ["sqrt(1 - p)", 0]]],
        ],
    }
    path = tmp_path / "tpl.json"
    path.write_text(json.dumps(tpl))
    rows = _csv(run(["sweep", "--template", str(path), "--range", "0", "1", "--steps", "5"])[1])
    assert [float(r["R"]) for r in rows] == pytest.approx([1, 0.75, 0.5, 0.25, 0])
    assert run(["sweep", "--template", str(path)])[0] == 1


def test_audit_is_deterministic_and_clean():
    a = run(["audit", "--dim", "3", "--outcomes", "3", "--count", "500", "--seed", "1"])
    b = run(["audit", "--dim", "3", "--outcomes", "3", "--count", "500", "--seed", "1"])
    assert a == b
    assert a[0] == 0 and "total violations: 0" in a[1]


def test_audit_qubit_identity():
    res = audit(2, 3, 1000, seed=0)
    assert res["max_qubit_identity_deviation"] < 1e-12
    code, out, _ = run(["audit", "--dim", "2", "--outcomes", "2", "--count", "100", "--json"])
    assert json.loads(out)["max_qubit_identity_deviation"] < 1e-12


def test_oracle_check_command():
    code, out, _ = run(["oracle-check", "--family", "ex_ii", "--param", "0.5", "--samples", "20000"])
    assert code == 0
    assert "DISAGREES" not in out and "Monte Carlo" in out


def test_export_command(tmp_path):
    path = tmp_path / "e.json"
    assert run(["export", "--family", "ex_v", "--param", "0.5", "--with-reversal", "-o", str(path)])[0] == 0
    data = json.loads(path.read_text())
    assert data["reversal"]["success_count"] == [0, 1]
    assert run(["export", "--family", "ex_ii", "--param", "1", "--with-reversal"])[0] == 1


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
