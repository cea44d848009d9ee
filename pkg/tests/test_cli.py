import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from raumproblem.cli import main
from raumproblem.report import payload_bytes, schema

DATA = resources.files("raumproblem").joinpath("data")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    report = json.loads(out)
    jsonschema.validate(report, schema())
    return code, report


def test_verify_so12_passes(capsys):
    code, report = run_json(capsys, "pos", "verify", "--algebra", "so:1,2")
    assert code == 0 and report["summary"]["passed"]
    v = report["payload"]["verdict"]
    assert (v["cond1"], v["cond2"], v["cond3_kernel_dim"], v["PA"], v["PB"]) == (True, True, 0, True, True)


def test_verify_sp4_fails_pb(capsys):
    code, report = run_json(capsys, "pos", "verify", "--algebra", "sp:4")
    v = report["payload"]["verdict"]
    assert code == 1
    assert v["PB"] is False and v["cond3_kernel_dim"] == 20 and v["delta_nullity"] == 20
    assert "PB" in report["summary"]["failed_checks"]


def test_catalog_odd_n_omits_symplectic(capsys, tmp_path):
    out = tmp_path / "cat.json"
    code, report = run_json(capsys, "pos", "catalog", "--n", "7", "--out", str(out))
    names = [v["algebra"] for v in report["payload"]["catalog"]["verdicts"]]
    assert code == 0 and not any(n.startswith("sp") for n in names)
    assert json.loads(out.read_text())["payload"] == report["payload"]


def test_catalog_human_output(capsys):
    code, out, _ = run(capsys, "pos", "catalog", "--n", "2")
    assert code == 0 and "survivors: so(2,0), so(1,1), so(0,2)" in out


def test_catalog_payload_deterministic(capsys):
    first = run_json(capsys, "pos", "catalog", "--n", "3")[1]
    second = run_json(capsys, "pos", "catalog", "--n", "3", "--jobs", "2")[1]
    assert payload_bytes(first) == payload_bytes(second)


@pytest.mark.parametrize("argv", [[], ["pos"], ["pos", "verify"], ["pos", "verify", "--algebra", "xx:2"],
                                  ["pos", "catalog", "--n", "1"], ["pos", "catalog", "--n", "two"],
                                  ["bogus"]])
def test_usage_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_missing_and_bad_config_exit_3(capsys, tmp_path):
    assert run(capsys, "weyl", "check", "--config", str(tmp_path / "nope.json"))[0] == 3
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2, "box": [[0,1],[0,1]], "g": [["1","0"],["0","1"]], "phi": ["x1 +", "0"]}')
    code, _, err = run(capsys, "weyl", "check", "--config", str(bad))
    assert code == 3 and "config error" in err
    assert run(capsys, "cartan", "check", "--config", str(bad))[0] == 3


@pytest.mark.parametrize("name", ["flat_constant", "polar", "exact_3d", "lorentz", "sphere"])
def test_weyl_check_shipped(capsys, name):
    code, report = run_json(capsys, "weyl", "check", "--config", str(DATA / f"weyl_{name}.json"))
    assert code == 0
    names = {c["name"] for c in report["payload"]["checks"]}
    assert "compatibility_residual" in names
    assert ("stokes" in names) != ("loop_holonomy" in names)


def test_weyl_check_with_gauge_field(capsys, tmp_path):
    cfg = json.loads((DATA / "weyl_polar.json").read_text())
    cfg["gauge"] = "2 + sin(x1*x2)"
    path = tmp_path / "g.json"
    path.write_text(json.dumps(cfg))
    code, report = run_json(capsys, "weyl", "check", "--config", str(path))
    assert code == 0
    assert "gamma_gauge_invariance" in {c["name"] for c in report["payload"]["checks"]}


def test_weyl_gauge(capsys):
    code, report = run_json(capsys, "weyl", "gauge", "--config", str(DATA / "weyl_flat_constant.json"),
                            "--omega", "exp(x1)")
    assert code == 0
    assert report["payload"]["transformed"]["g"][0][0] == "exp(x1)^2"


def test_weyl_gauge_bad_omega(capsys):
    cfg = str(DATA / "weyl_flat_constant.json")
    assert run(capsys, "weyl", "gauge", "--config", cfg, "--omega", "exp(")[0] == 2
    code, report = run_json(capsys, "weyl", "gauge", "--config", cfg, "--omega", "x1")
    assert code == 1 and "not positive" in report["payload"]["error"]


def test_tolerance_env_override(capsys, monkeypatch):
    cfg = str(DATA / "weyl_sphere.json")
    monkeypatch.setenv("RAUMPROBLEM_TOL", "residual=1e-30")
    code, report = run_json(capsys, "weyl", "check", "--config", cfg)
    assert code == 1 and report["summary"]["failed_checks"] == ["compatibility_residual"]
    assert report["payload"]["tolerances"]["residual"] == 1e-30
    monkeypatch.setenv("RAUMPROBLEM_TOL", "nonsense=1")
    assert run(capsys, "weyl", "check", "--config", cfg)[0] == 3


@pytest.mark.parametrize("name", ["flat", "polar", "sphere"])
def test_cartan_commands(capsys, name):
    cfg = str(DATA / f"cartan_{name}.json")
    code, report = run_json(capsys, "cartan", "check", "--config", cfg)
    assert code == 0 and report["payload"]["max_torsion"] < 1e-12
    code, report = run_json(capsys, "cartan", "lc", "--config", cfg)
    assert code == 0
    checks = {c["name"]: c for c in report["payload"]["checks"]}
    assert checks["lc_torsion"]["value"] < 1e-9 and checks["uniqueness_probe"]["value"] >= 1e-4


def test_cartan_check_reports_wrong_algebra(capsys, tmp_path):
    cfg = json.loads((DATA / "cartan_polar.json").read_text())
    cfg["connection"][0][0] = ["1", "0"]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    code, report = run_json(capsys, "cartan", "check", "--config", str(path))
    assert code == 1 and report["summary"]["failed_checks"] == ["algebra_valued"]


def test_cartan_lc_needs_metric(capsys, tmp_path):
    cfg = json.loads((DATA / "cartan_polar.json").read_text())
    del cfg["g"]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert run(capsys, "cartan", "lc", "--config", str(path))[0] == 3


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "raumproblem.cli", "pos", "verify", "--algebra", "so:2,0"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout
