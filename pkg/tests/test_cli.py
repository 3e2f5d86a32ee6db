import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest
from click.testing import CliRunner

from randfib.cli import main
from randfib.csvio import CurveResult, RunManifest, fmt, parse_grid, read_body, render

GOLDEN = Path(__file__).parent / "golden"


def run(*args, env=None):
    return CliRunner().invoke(main, [str(a) for a in args], env=env)


def body(result):
    return read_body(result.stdout)


def manifest(text):
    lines = [line[2:] for line in text.splitlines() if line.startswith("# ")]
    return dict(line.split(": ", 1) for line in lines if ": " in line)


@pytest.mark.parametrize("name,args", [
    ("gamma_curve_endpoints.csv", ["gamma-curve", "--a", 0.5, "--b", 0.6, "--eps-grid", "0,1"]),
    ("moments_a0.5_b0.6_e0.2.csv", ["moments", "--a", 0.5, "--b", 0.6, "--eps", 0.2, "--N", 4]),
    ("tail_curve_a0.5_b0.6.csv", ["tail-curve", "--a", 0.5, "--b", 0.6, "--eps-grid",
                                  "0.03:0.12:0.03"]),
    ("lambda_curve_a0.3_b0.9.csv", ["lambda-curve", "--a", 0.3, "--b", 0.9, "--eps-grid",
                                    "0.1,0.5", "--t-grid", "0,1,2.5"]),
    ("simulate_a0.5_b0.6_e0.05.csv", ["simulate", "--a", 0.5, "--b", 0.6, "--eps", 0.05,
                                      "--n", 2000, "--m", 1000, "--seed", 42]),
])
def test_golden_bodies(name, args):
    r = run(*args)
    assert r.exit_code == 0, r.stderr
    assert body(r) == (GOLDEN / name).read_text()


def test_critical_eps_golden(tmp_path):
    out = tmp_path / "c.csv"
    r = run("critical-eps", "--a", 0.5, "--b", 0.6, "--out", out)
    assert r.exit_code == 0
    star = float(r.stdout.strip())
    assert star == pytest.approx(0.134889994052026688, abs=1e-10)
    golden = (GOLDEN / "critical_eps_a0.5_b0.6.csv").read_text()
    assert read_body(out.read_text()) == golden
    row = golden.splitlines()[1].split(",")
    assert float(row[3]) < star < float(row[4])
    r2 = run("critical-eps", "--a", 0.5, "--b", 0.6)
    assert r2.stdout.splitlines()[0] == r.stdout.strip()


def test_gamma_curve_endpoints_and_check():
    rows = body(run("gamma-curve", "--a", 0.5, "--b", 0.6, "--eps-grid", "0,1")).splitlines()
    assert rows[0] == "eps,gamma,tail_bound"
    assert rows[2] == "1.0,-0.6931471805599453,0.0"
    assert run("gamma-curve", "--a", 0.3, "--b", 0.9, "--eps-grid", "0:1:0.01", "--check").exit_code == 0
    assert run("gamma-curve", "--a", 0.3, "--b", 0.9, "--eps-grid", "0.2,0.1", "--check").exit_code == 1


def test_manifest_header():
    r = run("gamma-curve", "--a", 0.5, "--b", 0.6, "--eps-grid", "0.25")
    m = manifest(r.stdout)
    assert m["command"] == "gamma-curve"
    flags = json.loads(m["flags"])
    assert flags["eps_grid"] == [0.25] and flags["a"] == 0.5
    assert m["body_sha256"] == hashlib.sha256(body(r).encode()).hexdigest()
    assert "started" in m and r.stdout.startswith("# randfib ")


@pytest.mark.parametrize("args", [
    ["gamma-curve", "--a", 0.5, "--b", 0.4],
    ["gamma-curve", "--a", 0.5, "--b", 0.5],
    ["critical-eps", "--a", 1.0, "--b", 0.6],
    ["moments", "--a", 0.5, "--b", 0.6, "--eps", 1.5, "--N", 3],
])
def test_constraint_violation_exits_2(args):
    r = run(*args)
    assert r.exit_code == 2
    assert "b > 1 - a" in r.stderr or "a in (0,1)" in r.stderr or "eps in [0,1]" in r.stderr


def test_constraint_message_names_inequality():
    r = run("gamma-curve", "--a", 0.5, "--b", 0.4)
    assert "b > 1 - a" in r.stderr


@pytest.mark.parametrize("args", [
    ["gamma-curve", "--a", 0.5, "--b", 0.6, "--eps-grid", "0:1"],
    ["gamma-curve", "--a", 0.5, "--b", 0.6, "--eps-grid", "0,2"],
    ["lambda-curve", "--a", 0.5, "--b", 0.6, "--eps-grid", "0.1", "--t-grid", "-1"],
    ["simulate", "--a", 0.5, "--b", 0.6, "--eps", 0.1, "--n", 1],
    ["gamma-curve", "--b", 0.6],
])
def test_bad_arguments_exit_2(args):
    assert run(*args).exit_code == 2


def test_numeric_failure_exits_1():
    r = run("lambda-curve", "--a", 0.5, "--b", 0.6, "--eps-grid", "0.5", "--t-grid", "2000")
    assert r.exit_code == 1 and "NoConvergence" in r.stderr


def test_tail_curve_sentinel():
    r = run("tail-curve", "--a", 0.5, "--b", 0.6, "--eps-grid", "0,0.05,0.2")
    assert r.exit_code == 0
    assert "warning" in r.stderr
    rows = body(r).splitlines()
    assert rows[1].startswith("0.0,inf,inf")
    assert rows[3] == "0.2,NoRoot,NoRoot,,,"


def test_tail_curve_with_mc():
    r = run("tail-curve", "--a", 0.5, "--b", 0.6, "--eps-grid", "0.07", "--mc", "--mc-n", 5000,
            "--mc-m", 5000)
    row = body(r).splitlines()[1].split(",")
    s, hill = float(row[1]), float(row[4])
    assert abs(hill - s) / s < 0.25 and float(row[5]) > 0


def test_moments_oracle_columns_stop_at_16():
    rows = body(run("moments", "--a", 0.3, "--b", 1.2, "--eps", 0.5, "--N", 18)).splitlines()
    assert len(rows) == 20
    assert all(float(r.split(",")[-1]) < 1e-12 for r in rows[1:18])
    assert rows[18].endswith(",,,") and rows[19].endswith(",,,")


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# shared settings\na = 0.5\nb = 0.6\neps-grid = 0.1,0.2\n")
    r = run("--config", cfg, "gamma-curve")
    assert r.exit_code == 0, r.stderr
    assert [line.split(",")[0] for line in body(r).splitlines()[1:]] == ["0.1", "0.2"]
    r = run("--config", cfg, "gamma-curve", "--eps-grid", "0.3")
    assert [line.split(",")[0] for line in body(r).splitlines()[1:]] == ["0.3"]


def test_seed_from_environment():
    args = ["simulate", "--a", 0.5, "--b", 0.6, "--eps", 0.1, "--n", 200, "--m", 50]
    env_run = run(*args, env={"RANDFIB_SEED": "9"})
    flag_run = run(*args, "--seed", 9)
    assert body(env_run) == body(flag_run)
    assert manifest(env_run.stdout)["seed"] == "9"
    both = run(*args, "--seed", 3, env={"RANDFIB_SEED": "9"})
    assert manifest(both.stdout)["seed"] == "3"


def test_simulate_dump_and_initial_pairs(tmp_path):
    dump = tmp_path / "w.txt"
    r = run("simulate", "--a", 0.5, "--b", 0.6, "--eps", 0.1, "--n", 300, "--m", 40,
            "--dump", dump)
    vals = dump.read_text().splitlines()
    assert len(vals) == 40 and all(fmt(float(v)) == v for v in vals)
    r = run("simulate", "--a", 0.5, "--b", 0.6, "--eps", 0.1, "--n", 300, "--m", 40,
            "--initial", 1, 0.5, "--initial", 2, 3, "--dump", dump)
    rows = body(r).splitlines()
    assert rows[0] == "eps,n,m,seed,gamma_hat,gamma_se,s_hill,s_hill_se,K_hat,x0,x1"
    assert len(rows) == 3 and rows[2].endswith(",2.0,3.0")
    assert (tmp_path / "w.0.txt").exists() and (tmp_path / "w.1.txt").exists()
    r = run("simulate", "--a", 0.5, "--b", 0.6, "--eps", 0.1, "--initial", 0, 1)
    assert r.exit_code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "randfib", "critical-eps", "--a", "0.5", "--b", "0.6"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.splitlines()[0] == "0.13488999407854863"


def test_grid_parsing():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("0:0.3:0.1") == [0.0, 0.1, 0.2, 0.3]
    assert parse_grid("0.4") == [0.4]
    assert parse_grid("0.1, 0.3") == [0.1, 0.3]
    for bad in ("1:2", "0:1:0", "a,b"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_round_trip_formatting():
    for x in (0.1, 1 / 3, 2.0 ** -1074, 1e300, -0.0, 123456789.123):
        assert float(fmt(x)) == x
    assert fmt(float("inf")) == "inf" and fmt(True) == "1" and fmt(7) == "7"
    res = CurveResult(["x"])
    res.add(0.1)
    text = render(res, RunManifest("t", {}))
    assert read_body(text) == "x\n0.1\n"
    with pytest.raises(ValueError):
        res.add(1, 2)
