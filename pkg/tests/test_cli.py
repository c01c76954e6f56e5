import json
import os

import pytest

from lpsections import verify
from lpsections.cli import main, parse_and_validate


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_section_spec_is_valid():
    spec = parse_and_validate(["section", "--space", "lq:q=1,m=2", "--p", "1", "--n", "2",
                               "--theta", "diag", "--samples", "1000000", "--seed", "7"])
    assert spec.command == "section" and spec.mc.samples == 1_000_000 and spec.mc.seed == 7


def test_theta_validation(capsys):
    code, out, err = run(capsys, "section", "--space", "lq:q=1,m=2", "--p", "1", "--n", "2", "--theta", "1,1")
    assert code == 2 and out == "" and "unit" in err
    code, out, _ = run(capsys, "section", "--space", "lq:q=1,m=2", "--p", "1", "--n", "2",
                       "--theta", "1,0", "--samples", "2000")
    assert code == 0 and json.loads(out)["estimate"]["value"] == pytest.approx(2.0, rel=0.1)


@pytest.mark.parametrize("argv", [
    ["section", "--space", "lq:q=1,m=2", "--bogus"],
    ["section", "--space", "lq:q=1,m=2", "--p", "1x", "--n", "2", "--theta", "diag"],
    ["section", "--space", "measure:/does/not/exist,p=1", "--p", "1", "--n", "2", "--theta", "diag"],
    ["project", "--space", "lq:q=0.5,m=2", "--n", "2", "--theta", "diag"],
    ["laplace", "--space", "euclid:m=1", "--p", "1", "--n", "3", "--theta", "diag"],
    ["laplace", "--space", "euclid:m=1", "--p", "1", "--n", "3", "--theta", "diag", "--alpha", "2"],
    ["meanwidth", "--space", "euclid:m=1", "--p", "0.5", "--n", "2", "--theta", "diag"],
    ["section", "--space", "euclid:m=1", "--p", "1", "--n", "2", "--theta", "diag", "--samples", "0"],
    ["verify", "nonsense"],
    [],
])
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err.startswith("error:")


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"space": "euclid:m=1", "p": 1, "n": 2, "theta": "e1",
                               "lambda": 1.0, "samples": 500, "seed": 1}))
    code, out, _ = run(capsys, "laplace", "--config", str(cfg), "--seed", "5")
    rep = json.loads(out)
    assert code == 0 and rep["estimate"]["seed"] == 5 and rep["estimate"]["samples"] == 500
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    code, _, err = run(capsys, "laplace", "--config", str(bad))
    assert code == 2 and "unknown keys" in err


def test_output_file_only_on_success(tmp_path, capsys):
    good = tmp_path / "good.json"
    code, out, _ = run(capsys, "meanwidth", "--space", "euclid:m=1", "--p", "1", "--n", "2",
                       "--theta", "diag", "--samples", "100", "--output", str(good))
    assert code == 0 and out == ""
    assert json.loads(good.read_text())["estimate"]["value"] == pytest.approx(2**0.5)
    bad = tmp_path / "bad.json"
    code, _, _ = run(capsys, "meanwidth", "--space", "euclid:m=1", "--p", "0.5", "--n", "2",
                     "--theta", "diag", "--output", str(bad))
    assert code == 2 and not bad.exists()
    assert [p.name for p in tmp_path.iterdir()] == ["good.json"]


def test_csv_format(capsys):
    code, out, _ = run(capsys, "volume", "--space", "lq:q=1,m=4", "--samples", "1000", "--format", "csv")
    header, row = out.strip().split("\n")
    assert code == 0 and "exact.value" in header.split(",")


def test_lewis_command(tmp_path, capsys):
    f = tmp_path / "mu.txt"
    f.write_text("# weight direction\n1 1 0\n1 0 1\n0.5 0.6 0.8\n")
    code, out, _ = run(capsys, "lewis", "--space", f"measure:{f},p=1")
    rep = json.loads(out)
    assert code == 0 and rep["converged"] and rep["residual"] < 1e-10 and len(rep["A"]) == 2
    code, out, _ = run(capsys, "lewis", "--measure", str(f), "--p", "1", "--max-iter", "1")
    assert code == 1 and json.loads(out)["converged"] is False


def test_other_commands(capsys):
    code, out, _ = run(capsys, "detlab", "--m", "1", "--kind", "uniform", "--alphas", "0.5,0.5", "--samples", "1000")
    assert code == 0 and json.loads(out)["estimate"]["value"] == pytest.approx(0.68, abs=0.01)
    code, out, _ = run(capsys, "project", "--space", "lq:q=inf,m=1", "--n", "2", "--theta", "diag",
                       "--samples", "2000")
    assert code == 0 and json.loads(out)["estimate"]["value"] == pytest.approx(2 * 2**0.5, rel=0.05)
    code, out, _ = run(capsys, "section", "--space", "lq:q=1,m=1", "--p", "3", "--n", "3",
                       "--theta", "diag", "--probe", "--samples", "1000")
    assert code == 0 and {"section", "lower_dim_volume"} <= set(json.loads(out))


def test_subspace_file(tmp_path, capsys):
    f = tmp_path / "E.txt"
    r = 2**-0.5
    f.write_text(f"{r} 0.5 0 -0.5\n0 0.5 {r} 0.5\n")
    code, out, _ = run(capsys, "section", "--space", "lq:q=1,m=4", "--p", "1", "--subspace-file", str(f),
                       "--samples", "20000")
    assert code == 0 and json.loads(out)["estimate"]["value"] == pytest.approx(0.9706, rel=0.01)
    f.write_text("1 0 0 0\n0 1 0.001 0\n")
    code, _, err = run(capsys, "section", "--space", "lq:q=1,m=4", "--p", "1", "--subspace-file", str(f))
    assert code == 2 and "orthonormal" in err


def test_verify_exact(capsys):
    code, out, _ = run(capsys, "verify", "exact")
    lines = out.strip().split("\n")
    assert code == 0 and lines[0] == "check_id,lhs,rhs,sigma_slack,pass"
    ids = [l.split(",")[0] for l in lines[1:]]
    assert all(f"exact/counterexample/n={n}" in ids for n in range(2, 11))
    assert all(l.endswith(",true") for l in lines[1:])


def test_verify_is_deterministic(capsys, monkeypatch):
    _, first, _ = run(capsys, "verify", "schur-sections", "--seed", "7")
    _, second, _ = run(capsys, "verify", "schur-sections", "--seed", "7")
    monkeypatch.setenv("LPSECTIONS_WORKERS", "3")
    _, threaded, _ = run(capsys, "verify", "schur-sections", "--seed", "7")
    assert first == second == threaded


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "lpsections", "verify", "exact"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("check_id,")


def test_failed_check_exits_one(capsys, monkeypatch):
    bad = [verify.Check("demo/failing", 2.0, 1.0, -5.0, False)]
    monkeypatch.setattr(verify, "run_suite", lambda name, seed=0, workers=None: bad)
    code, out, _ = run(capsys, "verify", "exact")
    assert code == 1 and out.strip().split("\n")[1] == "demo/failing,2.0,1.0,-5.0,false"
