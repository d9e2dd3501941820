import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from jumpentropy import cli

SMALL = ["--t-max", "3", "--dt", "1e-3", "--trajectories", "300", "--bin-width", "0.5"]


def _run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = cli.main(["run", *SMALL, "--output", str(out), *args])
    return code, out


def _table(path):
    lines = path.read_text().splitlines()
    comments = [l for l in lines if l.startswith("#")]
    rows = list(csv.DictReader([l for l in lines if not l.startswith("#")]))
    return comments, rows


def test_csv_schema_and_content(tmp_path):
    code, out = _run(tmp_path, "--seed", "42")
    assert code == 0
    comments, rows = _table(out)
    assert comments[0] == "# seed=42"
    assert comments[1].startswith("# config={")
    header = out.read_text().splitlines()[2]
    assert header == ("source,t,S_mc,S_me,J_mc,J_me,sigma_mc,stderr_sigma,sigma_me,sigma_stationary,"
                      "N_minus_mean_0,N_plus_mean_0")
    mc = [r for r in rows if r["source"] == "mc"]
    me = [r for r in rows if r["source"] == "me"]
    assert len(mc) == 6 and len(me) == 61
    assert all(r["S_me"] == "" and r["sigma_me"] == "" for r in mc)
    assert all(r["S_mc"] == "" and r["stderr_sigma"] == "" for r in me)
    times = [float(r["t"]) for r in rows]
    assert times == sorted(times)
    assert float(mc[0]["t"]) == pytest.approx(0.25)
    assert float(rows[0]["sigma_stationary"]) == pytest.approx(0.031313, abs=1e-6)
    assert b"\r" not in out.read_bytes()


def test_mode_master_and_mc_only(tmp_path):
    code, out = _run(tmp_path, "--mode", "master")
    assert code == 0
    assert {r["source"] for r in _table(out)[1]} == {"me"}
    code, out = _run(tmp_path, "--mode", "mc", name="mc.csv")
    assert code == 0
    assert {r["source"] for r in _table(out)[1]} == {"mc"}


def test_lambda_columns(tmp_path):
    code, out = _run(tmp_path, "--model", "lambda", "--mode", "master")
    assert code == 0
    header = out.read_text().splitlines()[2].split(",")
    assert header[-4:] == ["N_minus_mean_0", "N_plus_mean_0", "N_minus_mean_1", "N_plus_mean_1"]
    assert float(_table(out)[1][0]["sigma_stationary"]) == pytest.approx(0.072582, abs=1e-6)


def test_byte_identical_across_runs_and_workers(tmp_path):
    _, a = _run(tmp_path, "--seed", "5", "--workers", "1", name="a.csv")
    _, b = _run(tmp_path, "--seed", "5", "--workers", "1", name="b.csv")
    _, c = _run(tmp_path, "--seed", "5", "--workers", "2", name="c.csv")
    _, d = _run(tmp_path, "--seed", "6", name="d.csv")
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    assert a.read_bytes() != d.read_bytes()


def test_config_file_precedence(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# comment\nseed = 9\ntrajectories = 50\nbin-width = 1.0\n")
    cfg = cli.config_from_args(cli._parser().parse_args(["run", "--config", str(conf), "--seed", "3"]))
    assert cfg.seed == 3 and cfg.trajectories == 50 and cfg.bin_width == 1.0
    assert cli.RunConfig().seed == 0
    bad = tmp_path / "bad.conf"
    bad.write_text("colour = red\n")
    assert cli.main(["run", "--config", str(bad)]) == cli.EXIT_INVALID


def test_validation_errors(tmp_path):
    assert _run(tmp_path, "--trajectories", "0", "--mode", "mc")[0] == cli.EXIT_INVALID
    assert _run(tmp_path, "--bin-width", "0.002")[0] == cli.EXIT_INVALID
    assert _run(tmp_path, "--dt", "-1")[0] == cli.EXIT_INVALID
    assert _run(tmp_path, "--rabi", "-1")[0] == cli.EXIT_INVALID
    assert not list(tmp_path.glob("*.csv"))


def test_numerical_failure_removes_output(tmp_path):
    code, out = _run(tmp_path, "--gamma-minus", "1000", "--mode", "mc")
    assert code == cli.EXIT_NUMERICAL
    assert not out.exists()
    assert not list(tmp_path.iterdir())


def test_validate_reports(capsys):
    assert cli.main(["validate"]) == 0
    text = capsys.readouterr().out
    assert "OK" in text and "0.031313" in text and "recommended dt" in text
    assert cli.main(["validate", "--model", "lambda"]) == 0
    text = capsys.readouterr().out
    assert "degenerate spectrum: 2 channels" in text and "0.072582" in text
    assert cli.main(["validate", "--channel-omega", "2"]) == cli.EXIT_INVALID
    assert "eigen-operator" in capsys.readouterr().out


def test_run_summary(tmp_path):
    buf = io.StringIO()
    cfg = cli.RunConfig(t_max=3.0, trajectories=200, output_path=str(tmp_path / "x.csv"), workers=1)
    assert cli.run(cfg, out=buf) == 0
    assert "0.031313" in buf.getvalue() and "bins within 3 stderr" in buf.getvalue()


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "jumpentropy", "run", *SMALL, "--mode", "master", "--output", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    proc = subprocess.run([sys.executable, "-m", "jumpentropy", "run", "--trajectories", "0", "--mode", "mc"],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 2 and "trajectories" in proc.stderr
