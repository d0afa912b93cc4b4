import json
import math
import os
import subprocess
import sys

import pytest

from caustic_forge.cli import ConfigError, apply_override, dumps, main, parse_override

CIRCLE = {"oval": {"family": "circle", "r": 1.0}, "source": [0.5, 0.0], "n_list": [1, 2]}
OFF_ELLIPSE = {"oval": {"family": "ellipse", "a": math.sqrt(5) / 2, "b": 1.0}, "source": [0.6, 0.2],
        "n_list": [1, 2, 3]}


def run(tmp_path, command, cfg, *overrides, name="out"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / name
    argv = [command, "--config", str(path), "--out", str(out)]
    for o in overrides:
        argv += ["--override", o]
    return main(argv), out


def load(path):
    return json.loads(path.read_text())


def test_caustic_outputs(tmp_path):
    code, out = run(tmp_path, "caustic", OFF_ELLIPSE)
    assert code == 0
    rep = load(out / "caustic_report.json")
    for n in (1, 2, 3):
        for name in (f"beam_n{n}.csv", f"caustic_n{n}.csv", f"cusps_n{n}.json", f"caustic_n{n}.svg"):
            assert (out / name).exists()
        assert (out / f"caustic_n{n}.svg").read_text().startswith("<svg")
    assert (out / "caustics.svg").exists()
    r = rep["reports"][0]
    for key in ("n", "cusps", "degenerate", "signed_area", "winding", "simple", "samples",
                "cusp_parameters", "cusp_points", "at_infinity"):
        assert key in r
    assert rep["scenario"]["source"] == [0.6, 0.2]
    assert [x["cusps"] for x in rep["reports"]] == [4, 4, 4]
    assert all(x["conjecture_evidence"] and x["consistent"] for x in rep["reports"])
    assert rep["reports"][0]["conjecture"] == "ellipse_four_cusps"


def test_caustic_is_deterministic(tmp_path):
    _c1, a = run(tmp_path, "caustic", CIRCLE, name="a")
    _c2, b = run(tmp_path, "caustic", CIRCLE, name="b")
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_beam_csv_header(tmp_path):
    _code, out = run(tmp_path, "caustic", CIRCLE)
    head = (out / "beam_n2.csv").read_text().splitlines()
    assert head[0].startswith("# oval=") and head[2] == "# n=2"
    assert "s,alpha,p" in head


def test_check_passes_and_shear_control_fails(tmp_path):
    code, out = run(tmp_path, "check", CIRCLE)
    assert code == 0
    rep = load(out / "check_report.json")
    names = {c["name"] for c in rep["checks"]}
    assert {"jacobian", "generating_function", "crofton", "signed_area_n1"} <= names
    code, out = run(tmp_path, "check", {**CIRCLE, "law": "shear_control"}, name="shear")
    assert code == 1
    rep = load(out / "check_report.json")
    assert rep["area_defect"][0] == pytest.approx(2 * math.pi, abs=1e-9)


def test_front_report(tmp_path):
    code, out = run(tmp_path, "front", CIRCLE, "n_list=[1]")
    assert code == 0
    rep = load(out / "front_report.json")
    assert rep["passed"]
    r = rep["reports"][0]
    assert r["orthotomic_vertices"] == 4
    assert (out / "front_n1_z0.csv").read_text().splitlines()[0].startswith("#")


def test_flow_graph_input(tmp_path):
    cfg = {**CIRCLE, "csf": {"input": {"graph": [[2, 0.1, 0.0]]}, "until": "time", "T": 0.01,
                             "nodes": 256, "snapshot_every": 0.005}}
    code, out = run(tmp_path, "flow", cfg)
    assert code == 0
    header = (out / "monitors.csv").read_text().splitlines()[0]
    assert header == "time,area,inflections,max_p,max_curvature"
    assert (out / "snapshots" / "snapshot_0000.csv").exists()
    assert (out / "filmstrip.svg").exists()
    sh = load(out / "sturm_hurwitz.json")["graph_stage"]
    assert sh["sign_changes"] == 4


@pytest.mark.parametrize("cfg, overrides", [
    ({**CIRCLE, "source": [1.5, 0.0]}, ()),
    ({**CIRCLE, "colour": 1}, ()),
    ({"oval": {"family": "ellipse", "a": -1.0, "b": 1.0}}, ()),
    (CIRCLE, ("csf.until=\"soon\"",)),
    (CIRCLE, ("samples=8",)),
])
def test_config_errors_exit_2(tmp_path, capsys, cfg, overrides):
    command = "flow" if overrides and overrides[0].startswith("csf") else "caustic"
    code, _out = run(tmp_path, command, cfg, *overrides)
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["kind"] == "config"


def test_numerical_failure_exits_3(tmp_path, capsys):
    code, _out = run(tmp_path, "caustic", OFF_ELLIPSE, "n_list=[10]", "budget=4000")
    assert code == 3
    err = json.loads(capsys.readouterr().err.strip())
    assert err == {"error": "RefinementBudgetExceeded", "kind": "numerical",
                   "message": err["message"]}


def test_overrides():
    cfg = {"a": {"b": 1}}
    apply_override(cfg, *parse_override("a.b=2.5"))
    apply_override(cfg, *parse_override("a.c=[1, 2]"))
    assert cfg == {"a": {"b": 2.5, "c": [1, 2]}}
    with pytest.raises(ConfigError):
        parse_override("novalue")


def test_dumps_is_stable():
    text = dumps({"b": 0.1, "a": [1, 2.0, float("nan")], "c": {"z": True}})
    assert text == '{\n  "a": [1, 2, null],\n  "b": 0.10000000000000001,\n  "c": {\n    "z": true\n  }\n}'


def test_module_entry_point(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({**CIRCLE, "n_list": [1]}))
    proc = subprocess.run([sys.executable, "-m", "caustic_forge", "caustic", "--config", str(path),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert load(tmp_path / "o" / "caustic_report.json")["reports"][0]["cusps"] == 4
