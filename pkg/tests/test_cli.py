import json
import os
import subprocess
import sys

import pytest

from gev.cli import exit_status, main
from gev.report import build_report, emit_report, render_json, render_text, trajectory_csv


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr().out


def test_verify_two_claims(capsys):
    code, out = run(["verify", "--claims", "AB1,NA5", "--mode", "both", "--group", "su2",
                     "--trials", "50", "--seed", "7"], capsys)
    assert code == 0
    assert out.count("verified") >= 2


def test_conditional_needs_flag(capsys, tmp_path):
    code, _ = run(["verify", "--claims", "NA9", "--mode", "symbolic"], capsys)
    assert code != 0
    path = tmp_path / "na9.json"
    code, _ = run(["verify", "--claims", "NA9", "--mode", "symbolic", "--allow-conditional",
                   "--format", "json", "--output", str(path)], capsys)
    assert code == 0
    rep = json.loads(path.read_text())
    assert rep["claims"][0]["status"] == "conditional"


def test_unknown_claim_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--claims", "ZZ9"])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["verify", "--trials", "0"],
    ["verify", "--tol", "-1"],
    ["verify", "--group", "su4"],
    ["qm", "schrodinger", "--grid", "1000"],
    ["qm", "schrodinger", "--potential", "cubic:1"],
])
def test_invalid_config(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_json_report_schema_and_determinism(tmp_path, capsys):
    args = ["verify", "--claims", "AB2,NA8", "--group", "su2", "--trials", "20", "--seed", "3",
            "--format", "json", "--output"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + [str(a)]) == 0
    assert main(args + [str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert set(rep) >= {"version", "config", "claims", "qm"}
    for c in rep["claims"]:
        assert c["equation_anchor"] and c["certificate"]["kind"]
        for n in c["numeric"]:
            assert set(n) >= {"group", "trials", "seed", "max_residual", "mean_residual"}
    assert sorted(os.listdir(tmp_path)) == ["a.json", "b.json"]


def test_seed_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("GEV_SEED", "41")
    path = tmp_path / "r.json"
    main(["verify", "--claims", "AB1", "--trials", "3", "--seed", "1", "--format", "json",
          "--output", str(path)])
    rep = json.loads(path.read_text())
    assert rep["config"]["seed"] == 41
    assert rep["claims"][0]["numeric"][0]["seed"] == 41


def test_text_and_json_statuses_match(tmp_path, capsys):
    j, t = tmp_path / "r.json", tmp_path / "r.txt"
    base = ["verify", "--claims", "NA9,NA12", "--mode", "symbolic"]
    main(base + ["--format", "json", "--output", str(j)])
    main(base + ["--format", "text", "--output", str(t)])
    text = t.read_text()
    for c in json.loads(j.read_text())["claims"]:
        line = next(l for l in text.splitlines() if l.startswith(c["id"] + " "))
        assert c["status"] in line


def test_list_claims(capsys):
    code, out = run(["list-claims"], capsys)
    assert code == 0
    assert len(out.strip().splitlines()) == 21


def test_qm_schrodinger_writes_csv_and_json(tmp_path, capsys):
    out = tmp_path / "s.json"
    code = main(["qm", "schrodinger", "--potential", "harmonic:1.0", "--grid", "512",
                 "--domain", "30", "--dt", "2e-3", "--steps", "200", "--format", "json",
                 "--output", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    q = rep["qm"][0]
    assert q["experiment"] == "schrodinger"
    assert q["max_residuals"]["r_x"] < 1e-6
    assert set(q["convergence_ratios"]) == {"r_x", "r_p"}
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "t,x,p,force,norm,r_x,r_p"
    assert len(lines) == 202


def test_qm_dirac_verbs(tmp_path, capsys):
    assert main(["qm", "dirac-packet", "--format", "json", "--output", str(tmp_path / "p.json")]) == 0
    assert main(["qm", "dirac-force", "--potential", "linear:0.1", "--grid", "256", "--dt", "1e-3",
                 "--steps", "50", "--csv", str(tmp_path / "f.csv")]) == 0
    assert (tmp_path / "f.csv").read_text().startswith("t,x,p,alpha_x,force,norm,r_x,r_p")


def test_unwritable_output(capsys):
    code = main(["verify", "--claims", "AB1", "--mode", "symbolic", "--output",
                 "/nonexistent-dir/x.json"])
    assert code == 3


@pytest.mark.parametrize("statuses, flag, code", [
    (["verified"], False, 0),
    (["verified", "conditional"], False, 1),
    (["verified", "conditional"], True, 0),
    (["failed", "conditional"], True, 1),
    ([], False, 1),
])
def test_exit_status(statuses, flag, code):
    assert exit_status(statuses, flag) == code


def test_empty_report_rejected():
    with pytest.raises(ValueError):
        emit_report(build_report({}), "json")


def test_renderers():
    rep = build_report({"command": "x"}, qm=[{"experiment": "e", "status": "ok",
                                              "max_residuals": {"r": 1e-9}}])
    assert json.loads(render_json(rep))["qm"][0]["experiment"] == "e"
    assert "[e] status=ok" in render_text(rep)


def test_csv_blanks_for_nan():
    text = trajectory_csv({"a": [1.0, 2.0], "b": [float("nan"), 0.5]})
    assert text.splitlines() == ["a,b", "1.0,", "2.0,0.5"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "gev", "list-claims"], capture_output=True, text=True)
    assert r.returncode == 0 and "NA19" in r.stdout
