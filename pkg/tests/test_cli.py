from __future__ import annotations

import json
from pathlib import Path

import pytest

from lobfluct.cli import EXIT_CHECK_FAILED, EXIT_ERROR, RunConfig, main, resolve_config

FITTED = ["--regime", "hc", "--alpha-plus", "5", "--alpha-minus", "3", "--beta-plus", "2", "--beta-minus", "4"]


def _payload_files(d: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "timing.json"}


def test_simulate_deterministic(tmp_path):
    args = ["simulate", *FITTED, "--horizon", "900", "--seed", "1"]
    assert main(args + ["--output-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--output-dir", str(tmp_path / "b")]) == 0
    assert _payload_files(tmp_path / "a") == _payload_files(tmp_path / "b")
    lines = (tmp_path / "a" / "events.csv").read_text().splitlines()
    assert lines[0] == "t,side,direction,delta,bid,ask"
    assert len(lines) > 10_000


def test_config_round_trip(tmp_path):
    argv = ["simulate", *FITTED, "--horizon", "50", "--seed", "4", "--output-dir", str(tmp_path)]
    cfg = resolve_config(argv)
    assert main(argv) == 0
    meta = json.loads((tmp_path / "run.json").read_text())
    assert meta["schema_version"] == 1
    assert RunConfig.from_dict(meta["config"]) == cfg
    # the metadata file itself is a valid config
    again = resolve_config(["simulate", "--config", str(tmp_path / "run.json")])
    assert again == cfg


def test_precedence(tmp_path, monkeypatch):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"command": "simulate", "seed": 3, "horizon": 10.0}))
    assert resolve_config(["simulate"]).seed == 0
    assert resolve_config(["simulate", "--config", str(cfg_file)]).seed == 3
    cfg = resolve_config(["simulate", "--config", str(cfg_file), "--seed", "5"])
    assert cfg.seed == 5 and cfg.horizon == 10.0
    monkeypatch.setenv("LOBFLUCT_OUTPUT_DIR", str(tmp_path / "env"))
    assert resolve_config(["simulate"]).output_dir == str(tmp_path / "env")
    assert resolve_config(["simulate", "--output-dir", "x"]).output_dir == "x"


def test_regime_flags_merge():
    cfg = resolve_config(["simulate", "--alpha-plus", "7"])
    assert cfg.regime["alpha_plus"] == 7 and cfg.regime["beta_minus"] == 4
    nc = resolve_config(["simulate", "--regime", "nc", "--mu-exp", "1.5"])
    assert nc.regime_spec().name == "nc" and "catastrophe" not in nc.regime


def test_analyze(tmp_path):
    assert main(["analyze", *FITTED, "--output-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "analysis.json").read_text())
    assert rep["next_move_prob"] == 0.5
    assert {"mu", "pi", "mean_spread", "v", "D", "var_embedded", "var_continuous"} <= set(rep)
    assert {"theorem", "lemma_times_gamma", "generator"} <= set(rep["D"])
    assert abs(rep["D"]["generator"] + 0.4) < 1e-12
    assert (tmp_path / "stationary.csv").read_text().startswith("k,mu,pi\n1,0.2089")


def test_analyze_rejects_other_regimes(tmp_path, capsys):
    rc = main(["analyze", "--regime", "nc", "--mu-exp", "1.5", "--output-dir", str(tmp_path)])
    assert rc == EXIT_ERROR
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and "Monte Carlo" in err["message"]


def test_schema_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"command": "simulate", "nonsense": 1}))
    assert main(["simulate", "--config", str(bad)]) == EXIT_ERROR
    assert main(["simulate", "--alpha-plus", "-1", "--output-dir", str(tmp_path)]) == EXIT_ERROR
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["simulate", "--output-dir", str(blocker / "sub")]) == EXIT_ERROR
    for line in capsys.readouterr().err.strip().splitlines():
        assert "error" in json.loads(line)


def test_estimate_from_simulated(tmp_path):
    sim = tmp_path / "sim"
    assert main(["simulate", *FITTED, "--horizon", "300", "--seed", "2", "--output-dir", str(sim)]) == 0
    out = tmp_path / "est"
    assert main(["estimate", "--events", str(sim / "events.csv"), "--t-obs", "300", "--output-dir", str(out)]) == 0
    rates = json.loads((out / "rates.json").read_text())
    assert rates["T_obs"] == 300.0 and sum(rates["counts"].values()) > 3000


def test_estimate_bad_log(tmp_path, capsys):
    log = tmp_path / "log.csv"
    log.write_text("t,side,direction,delta\n1.0,ask,up,0\n")
    assert main(["estimate", "--events", str(log), "--output-dir", str(tmp_path / "o")]) == EXIT_ERROR
    assert json.loads(capsys.readouterr().err)["line"] == 2


def test_ldp_outputs(tmp_path):
    assert main(["ldp", "--x", "0.2", "--horizon", "50", "--output-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "ldp.json").read_text())
    assert rep["ldp_exponent"] == rep["rate_function_of_optimal"] == 5.0
    assert 0 < rep["exact_tail"]["probability"] < 1
    rows = (tmp_path / "spread_trajectory.csv").read_text().splitlines()
    assert rows[0] == "t,y" and rows[-1] == "1.0,0.2"


def test_verify_determinism_and_jobs(tmp_path):
    base = ["verify", "--check", "lln", "--quick", "--seed", "7"]
    assert main(base + ["--jobs", "1", "--output-dir", str(tmp_path / "a")]) == 0
    assert main(base + ["--jobs", "1", "--output-dir", str(tmp_path / "b")]) == 0
    assert main(base + ["--jobs", "2", "--output-dir", str(tmp_path / "c")]) == 0
    a = _payload_files(tmp_path / "a")
    assert a == _payload_files(tmp_path / "b") == _payload_files(tmp_path / "c")
    assert {"check_lln.json", "check_lln_negative.json", "summary.csv", "run.json"} <= set(a)
    timing = json.loads((tmp_path / "a" / "timing.json").read_text())
    assert "wall_seconds" in timing


def test_verify_exit_status_on_failure(tmp_path):
    rc = main(["verify", "--check", "occupancy", "--quick", "--tolerance", "occupancy_tv=0.0001",
               "--output-dir", str(tmp_path)])
    assert rc == EXIT_CHECK_FAILED
    summary = (tmp_path / "summary.csv").read_text()
    assert "invariant_occupancy[time],fail,pass,False" in summary


def test_verify_unknown_tolerance(tmp_path):
    assert main(["verify", "--tolerance", "bogus=1", "--output-dir", str(tmp_path)]) == EXIT_ERROR


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "lobfluct", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "simulate" in out.stdout


@pytest.mark.parametrize(
    "argv",
    [["simulate", "--horizon", "40"], ["analyze"], ["ldp", "--x", "0.5", "--horizon", "40"]],
)
def test_each_command_rerun_identical(tmp_path, argv):
    for d in ("a", "b"):
        assert main([*argv, "--seed", "3", "--output-dir", str(tmp_path / d)]) == 0
    assert _payload_files(tmp_path / "a") == _payload_files(tmp_path / "b")
