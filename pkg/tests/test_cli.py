import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from greendc import cli
from greendc.report import SchemaMismatch, compare, load_summary
from greendc.scenario import ConfigInvalid, bundled_scenario, load_scenario

REF = str(bundled_scenario("reference"))


@pytest.fixture
def scenario_dir(tmp_path):
    """Copy of the bundled scenario and its traces that tests may edit."""
    src = Path(REF).parent
    for name in ("reference.toml", "cluster.csv", "interactive.csv", "batch.csv", "solar_autumn.csv"):
        shutil.copy(src / name, tmp_path / name)
    return tmp_path


def test_validate_bundled_scenarios(capsys):
    paths = [str(bundled_scenario(n)) for n in ("reference", "longdeadline", "summer")]
    assert cli.main(["validate", *paths]) == 0
    assert capsys.readouterr().out.count(": ok") == 3


def test_validate_short_trace_names_both_lengths(scenario_dir, capsys):
    lines = (scenario_dir / "interactive.csv").read_text().splitlines()
    (scenario_dir / "interactive.csv").write_text("\n".join(lines[:101]) + "\n")
    assert cli.main(["validate", str(scenario_dir / "reference.toml")]) == 1
    err = capsys.readouterr().err
    assert "100 intervals" in err and "horizon is 288" in err


def test_validate_threshold_order(capsys):
    assert cli.main(["validate", REF, "--set", "tu_low=0.9"]) == 1
    assert "tu_low < tu_up" in capsys.readouterr().err


def test_validate_unknown_key(capsys):
    assert cli.main(["validate", REF, "--set", "bogus=1"]) == 1
    assert "bogus" in capsys.readouterr().err


def test_run_missing_trace_names_file(scenario_dir, tmp_path, capsys):
    (scenario_dir / "batch.csv").unlink()
    code = cli.main(["run", str(scenario_dir / "reference.toml"), "--out", str(tmp_path / "out")])
    assert code == 1
    assert "batch.csv" in capsys.readouterr().err


def test_run_two_policies_and_compare(tmp_path, capsys):
    out = tmp_path / "reports"
    assert cli.main(["run", REF, "--set", "policy=hs", "--out", str(out)]) == 0
    assert cli.main(["run", REF, "--set", "policy=gsa", "--out", str(out), "--plots"]) == 0
    hs, gsa = out / "reference-hs-oracle-s0", out / "reference-gsa-oracle-s0"
    assert (hs / "summary.json").is_file() and (gsa / "intervals.csv").is_file()
    assert {p.name for p in (gsa / "plots").iterdir()} == {"power.png", "active_hosts.png", "response_time.png"}

    rows = (gsa / "intervals.csv").read_text().splitlines()
    assert rows[0] == "t,server_w,cooling_w,total_w,renewable_w,brown_w,green_w,demand_units,active_hosts,mean_rt_ms,deactivated_pct"
    assert len(rows) == 289
    s = json.loads((gsa / "summary.json").read_text())
    assert s["brown_kwh"] + s["green_kwh"] == pytest.approx(s["total_kwh"], abs=1e-9)

    capsys.readouterr()
    assert cli.main(["compare", str(hs), str(gsa)]) == 0
    table = capsys.readouterr().out
    brown = next(line for line in table.splitlines() if line.startswith("brown_kwh"))
    assert float(brown.split()[3]) < 0

    deltas = compare(load_summary(gsa), load_summary(gsa))
    assert all(d == 0 and p == 0 for _, _, _, d, p in deltas)


def test_compare_rejects_different_horizons(tmp_path):
    out = tmp_path / "r"
    assert cli.main(["run", REF, "--set", "horizon=144", "--out", str(out / "a")]) == 0
    assert cli.main(["run", REF, "--set", "horizon=288", "--out", str(out / "b")]) == 0
    a = load_summary(out / "a" / "reference-gsa-oracle-s0")
    b = load_summary(out / "b" / "reference-gsa-oracle-s0")
    with pytest.raises(SchemaMismatch):
        compare(a, b)
    assert cli.main(["compare", str(out / "a" / "reference-gsa-oracle-s0"), str(out / "b" / "reference-gsa-oracle-s0")]) == 1


def test_seed_override_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["run", REF, "--set", "seed=7", "--out", str(out)]) == 0
    name = "reference-gsa-oracle-s7"
    assert (a / name / "summary.json").read_bytes() == (b / name / "summary.json").read_bytes()
    assert (a / name / "intervals.csv").read_bytes() == (b / name / "intervals.csv").read_bytes()


def test_run_parallel_workers_and_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
    paths = [REF, str(bundled_scenario("summer"))]
    assert cli.main(["run", *paths, "--workers", "2"]) == 0
    assert (tmp_path / "reference-gsa-oracle-s0" / "summary.json").is_file()
    assert (tmp_path / "summer-gsa-oracle-s0" / "summary.json").is_file()


def test_run_with_svr_predictor_records_fit(tmp_path):
    assert cli.main(["run", REF, "--set", "predictor=svr", "--out", str(tmp_path)]) == 0
    s = load_summary(tmp_path / "reference-gsa-svr-s0")
    assert 0.0 < s["svr_r2"] <= 1.0


def test_gen_traces_and_train_solar(tmp_path, capsys):
    assert cli.main(["gen-traces", "--out", str(tmp_path), "--seed", "4", "--season", "summer", "--history-days", "5"]) == 0
    assert {p.name for p in tmp_path.iterdir()} == {"interactive.csv", "batch.csv", "solar_summer.csv"}
    capsys.readouterr()
    assert cli.main(["train-solar", str(tmp_path / "solar_summer.csv")]) == 0
    assert "R2=" in capsys.readouterr().out


def test_bad_arguments_exit_1():
    assert cli.main([]) == 1
    assert cli.main(["run"]) == 1
    assert cli.main(["frobnicate"]) == 1


def test_internal_error_exit_2(monkeypatch, tmp_path):
    def boom(*_):
        raise RuntimeError("unexpected")

    monkeypatch.setattr(cli, "load_summary", boom)
    assert cli.main(["compare", str(tmp_path), str(tmp_path)]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "greendc", "validate", REF], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def test_scenario_overrides_and_errors(tmp_path):
    cfg = load_scenario(REF, {"num_thr": "80", "follow_renewables": "false"})
    assert cfg.num_thr == 80.0 and cfg.follow_renewables is False
    with pytest.raises(ConfigInvalid):
        load_scenario(REF, {"horizon": "abc"})
    bad = tmp_path / "bad.toml"
    bad.write_text("[nested]\nx = 1\n")
    with pytest.raises(ConfigInvalid):
        load_scenario(bad)
    with pytest.raises(ConfigInvalid):
        load_scenario(tmp_path / "absent.toml")
