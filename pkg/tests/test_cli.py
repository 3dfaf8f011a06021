import json
import math

import pytest

from dmberry.cli import main, parse_document, run

FIG = ["--j", "1", "--jz", "1.1", "--d", "0.5", "--b", "1", "--theta", "0.7853981633974483"]


def test_spectrum_zero_field_csv():
    status, text = run(["spectrum", "--j", "1", "--jz", "1", "--d", "0", "--b", "0",
                        "--theta", "0.7853981633974483"])
    assert status == 0
    meta, cols, rows = parse_document(text)
    assert cols[:4] == ["e0", "e1", "e2", "e3"]
    assert [float(rows[0][f"e{k}"]) for k in range(4)] == [-1.5, 0.5, 0.5, 0.5]
    assert meta["subcommand"] == "spectrum"
    assert meta["params"] == {"j": 1.0, "jz": 1.0, "d": 0.0, "b": 0.0, "theta": 0.7853981633974483}


def test_critical_json():
    status, text = run(["critical", "--j", "1", "--jz", "1.1"])
    assert status == 0
    doc = json.loads(text)
    assert doc["rows"] == [{"critical_d": pytest.approx(0.4582575694955841, abs=1e-15)}]
    _, text = run(["critical", "--j", "1", "--jz", "0.9"])
    assert json.loads(text)["rows"] == [{"critical_d": None}]


def test_berry_equator_closed():
    status, text = run(["berry", "--j", "1", "--jz", "1.1", "--d", "0.5", "--b", "1",
                        "--theta", "1.5707963267948966", "--level", "0", "--method", "closed"])
    assert status == 0
    _, cols, rows = parse_document(text)
    assert len(rows) == 1 and abs(float(rows[0]["phase"])) <= 1e-8
    assert cols == ["level", "phase", "method", "loop_min_gap", "flag"]


def test_berry_methods_agree():
    phases = {}
    for method in ("closed", "wilson"):
        _, text = run(["berry", *FIG, "--method", method, "--format", "json"])
        phases[method] = [r["phase"] for r in json.loads(text)["rows"]]
    for c, w in zip(phases["closed"], phases["wilson"]):
        assert abs(math.remainder(c - w, 2 * math.pi)) < 1e-4


def test_berry_adiabatic_columns():
    status, text = run(["berry", *FIG, "--level", "0", "--method", "adiabatic", "--period", "20",
                        "--format", "json"])
    assert status == 0
    doc = json.loads(text)
    assert doc["meta"]["steps"] == 4000
    assert set(doc["rows"][0]) >= {"total_phase", "dynamical_phase", "fidelity", "adiabatic_warning"}


@pytest.mark.parametrize("argv", [
    ["spectrum", "--b", "-1"],
    ["spectrum", "--theta", "4"],
    ["spectrum", "--theta-pi", "1.5"],
    ["spectrum", "--bogus", "1"],
    ["spectrum", "--theta", "1", "--theta-pi", "0.3"],
    ["berry", "--level", "7"],
    ["scan", "--axis", "d", "--range", "0:1"],
    ["scan", "--axis", "d", "--range", "1:0:5"],
    ["scan", "--axis", "d"],
    ["scan", "--figure", "2", "--axis", "d", "--range", "0:1:5"],
    ["scan", "--figure", "9"],
])
def test_usage_errors_exit_2(argv, capsys):
    status, text = run(argv)
    assert status == 2 and text == ""
    assert capsys.readouterr().err


def test_numerical_error_exit_1(capsys):
    status, text = run(["berry", "--b", "0", "--level", "2", "--format", "json"])
    assert status == 1
    doc = json.loads(text)
    assert doc["meta"]["error"] == "DegenerateLevel"
    assert doc["rows"][0]["flag"] == "DegenerateLevel"
    assert "DegenerateLevel" in capsys.readouterr().err


def test_error_names_preserved():
    status, text = run(["berry", *FIG, "--level", "0", "--method", "adiabatic", "--period", "10",
                        "--steps", "10", "--format", "json"])
    assert status == 1
    assert json.loads(text)["meta"]["error"] == "StepGuard"


def test_theta_pi_matches_radians():
    a = run(["spectrum", "--b", "1", "--d", "0.3", "--theta-pi", "0.25"])[1]
    b = run(["spectrum", "--b", "1", "--d", "0.3", "--theta", repr(math.pi / 4)])[1]
    assert parse_document(a)[2] == parse_document(b)[2]


def test_eigenstate_fallback_on_axis():
    status, text = run(["eigenstate", "--b", "1", "--theta", "0", "--level", "1", "--format", "json"])
    assert status == 0
    rows = json.loads(text)["rows"]
    assert [r["basis"] for r in rows] == ["11", "10", "01", "00"]
    assert {r["gauge"] for r in rows} == {"largest-component-real"}
    assert sum(r["re"] ** 2 + r["im"] ** 2 for r in rows) == pytest.approx(1.0, abs=1e-12)


def test_eigenstate_closed_form():
    _, text = run(["eigenstate", *FIG, "--phi", "0.4", "--format", "json"])
    rows = json.loads(text)["rows"]
    assert rows[0]["gauge"] == "paper-gauge"
    assert json.loads(text)["meta"]["phi"] == 0.4


@pytest.mark.parametrize("argv", [
    ["spectrum", *FIG],
    ["berry", *FIG, "--method", "wilson", "--grid", "256"],
    ["eigenstate", *FIG, "--phi", "1.25", "--level", "3"],
    ["critical", "--j", "1", "--jz", "1.3", "--format", "csv"],
    ["scan", *FIG, "--axis", "d", "--range", "0:1:11"],
    ["scan", *FIG, "--axis", "b", "--range", "0.1:1:3", "--axis", "d", "--range", "0:1:5", "--level", "1"],
])
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_meta_command_reproduces_document(argv, fmt):
    status, text = run(argv + ["--format", fmt])
    assert status == 0
    meta = json.loads(text)["meta"] if fmt == "json" else parse_document(text)[0]
    assert meta["version"]
    again = run(meta["command"].split())
    assert again == (0, text)


def test_csv_number_format():
    _, text = run(["spectrum", "--b", "1", "--d", "0.1", "--theta", "0.3"])
    _, _, rows = parse_document(text)
    for k in range(4):
        s = rows[0][f"e{k}"]
        assert repr(float(s)) == s


def test_scan_json_matches_csv():
    argv = ["scan", *FIG, "--axis", "theta", "--range", "0:3.14:7", "--method", "closed"]
    _, csv_text = run(argv)
    _, json_text = run(argv + ["--format", "json"])
    meta, cols, rows = parse_document(csv_text)
    doc = json.loads(json_text)
    assert meta["table"] == doc["meta"]["table"]
    assert list(doc["rows"][0]) == cols
    for r, d in zip(rows, doc["rows"]):
        for c in cols:
            if isinstance(d[c], float):
                assert float(r[c]) == d[c]


def test_main_writes_out_file(tmp_path, capsys):
    out = tmp_path / "spec.csv"
    assert main(["spectrum", "--b", "1", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert out.read_text() == run(["spectrum", "--b", "1"])[1]
