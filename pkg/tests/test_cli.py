import json
import os
import subprocess
import sys

import pytest

from tcscale import cli
from tcscale.ingest import CSV_FIELDS, parse_runs, serialize_runs

HEADER = ",".join(CSV_FIELDS) + "\n"
OUTPUTS = ["report.json", "report.csv", "u_curves.svg", "size_law.svg", "loss_law.svg", "heatmap.svg"]


def run(*argv):
    return cli.main(list(argv))


@pytest.mark.parametrize("text,minutes", [("30m", 30), ("30min", 30), ("4h", 240), ("1.5h", 90), ("1440", 1440)])
def test_parse_budget(text, minutes):
    assert cli.parse_budget(text) == minutes


@pytest.mark.parametrize("text", ["", "8x", "h", "-4h", "0", "4 hours"])
def test_parse_budget_rejects(text):
    with pytest.raises(cli.InputError):
        cli.parse_budget(text)


def test_analyze_embedded(tmp_path, capsys):
    assert run("analyze", "--output-dir", str(tmp_path), "--resamples", "200") == 0
    assert sorted(os.listdir(tmp_path)) == sorted(OUTPUTS)
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["schema_version"] == 1
    seq = [r["optimum_models"] for r in doc["budget_reports"]]
    assert seq == [["D8"], ["D10"], ["D14"], ["D14", "D16"], ["D16"], ["D20"], ["D24"], ["D26"]]
    assert doc["discrepancy_notes"]
    assert "Chinchilla" in (tmp_path / "size_law.svg").read_text()
    assert 'stroke="#d4af37"' in (tmp_path / "heatmap.svg").read_text()
    assert "note:" in capsys.readouterr().out


def test_analyze_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("analyze", "--output-dir", str(a), "--seed", "3", "--resamples", "300") == 0
    assert run("analyze", "--output-dir", str(b), "--seed", "3", "--resamples", "300") == 0
    for name in OUTPUTS:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_two_budget_csv(tmp_path):
    src = tmp_path / "runs.csv"
    src.write_text(HEADER + "D8,8,50.3,5,1.1,,\nD10,10,85.9,5,1.2,,\nD12,12,135.3,5,1.3,,\n"
                   "D8,8,50.3,30,0.99,,\nD10,10,85.9,30,0.95,,\nD12,12,135.3,30,0.97,,\n")
    assert run("analyze", "--input", str(src), "--output-dir", str(tmp_path / "o")) == 0
    doc = json.loads((tmp_path / "o" / "report.json").read_text())
    for f in doc["fits"].values():
        assert f["n_points"] == 2 and "degenerate_ci" in f["flags"] and f["ci95"] == [None, None]
    assert doc["size_law_bootstrap_ci95"] is None and doc["alpha_evolution"] == []
    # notes about the published tables are only made for the embedded grid
    assert not any(n.startswith(("size law", "regime")) for n in doc["discrepancy_notes"])


def test_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(HEADER + "D8,8,50.3,5,1.1,42,\nD8,8,50.3,5,1.2,42,\n")
    assert run("analyze", "--input", str(bad), "--output-dir", str(tmp_path)) == 2
    assert "duplicate" in capsys.readouterr().err
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert run("fit", "--input", str(empty)) == 2
    assert run("fit", "--input", str(tmp_path / "missing.csv")) == 2
    assert run("plan", "--budget", "8x") == 2
    assert run("plan", "--budget", "4h", "--hardware", str(tmp_path / "nope.json")) == 2
    assert run("analyze", "--tie", "median") == 2
    assert run("bogus") == 2


def test_computation_error(tmp_path, capsys):
    one = tmp_path / "one.csv"
    one.write_text(HEADER + "D8,8,50.3,5,1.1,,\nD10,10,85.9,5,1.0,,\n")
    assert run("fit", "--input", str(one)) == 3
    assert "computation error" in capsys.readouterr().err


def test_fit_formats(capsys):
    assert run("fit", "--format", "json", "--resamples", "200") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["fits"]["size_law"]["exponent_alpha"] == pytest.approx(0.5583, abs=1e-4)
    assert doc["fits"]["throughput"]["beta"] == pytest.approx(1.077, abs=1e-3)
    assert run("fit", "--format", "csv") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("law,coeff_a") and len(lines) == 4


def test_global_flags_before_subcommand(capsys):
    assert run("--format", "csv", "fit") == 0
    assert capsys.readouterr().out.startswith("law,")


def test_tie_flag_changes_anchor(capsys):
    run("fit", "--tie", "exclude", "--json")
    doc = json.loads(capsys.readouterr().out)
    assert doc["fits"]["size_law"]["n_points"] == 7


def test_plan(capsys):
    assert run("plan", "--budget", "8h", "--hardware", "rtx4090", "--json") == 0
    rec = json.loads(capsys.readouterr().out)["recommendations"][0]
    assert rec["snapped_depth"] == 20 and rec["snapped_params_m"] == 519.0
    assert abs(rec["expected_bpb"] - 0.836) <= 0.01
    assert run("plan", "--budget", "30m,4h,1440") == 0
    out = capsys.readouterr().out
    assert "D20" not in out.splitlines()[0] and len(out.strip().splitlines()) >= 4


def test_plan_custom_hardware(tmp_path, capsys):
    hw = tmp_path / "hw.json"
    hw.write_text(json.dumps({"name": "mine", "points": [[50.3, 400000], [855.6, 30000]]}))
    assert run("plan", "--budget", "2h", "--hardware", str(hw), "--json") == 0
    assert json.loads(capsys.readouterr().out)["recommendations"][0]["snapped_depth"] > 0


def test_simulate_feeds_analyze(tmp_path):
    out = tmp_path / "sim.csv"
    assert run("simulate", "--format", "csv", "--out", str(out)) == 0
    grid, issues = parse_runs(out.read_text())
    assert not issues and len(grid.records) == 80
    assert run("analyze", "--input", str(out), "--output-dir", str(tmp_path / "rep"), "--resamples", "200") == 0
    regimes = [r["regime"] for r in json.loads((tmp_path / "rep" / "report.json").read_text())["budget_reports"]]
    assert regimes[0] == "compute_bounded"
    t = regimes.index("transitional")
    assert "data_bounded" in regimes[t:]


def test_simulate_params_and_budgets(tmp_path, capsys):
    params = tmp_path / "p.json"
    from tcscale import sim

    params.write_text(json.dumps(sim.initial_params().to_json()))
    assert run("simulate", "--params", str(params), "--budgets", "1h,2h", "--out", "-", "--format", "csv") == 0
    grid, _ = parse_runs(capsys.readouterr().out)
    assert grid.budgets == [60.0, 120.0]
    assert run("simulate", "--budgets", "") == 2
    params.write_text('{"e_floor": -1}')
    assert run("simulate", "--params", str(params)) == 2


def test_simulate_calibrate(tmp_path, capsys):
    assert run("simulate", "--calibrate", "embedded", "--max-iters", "30", "--output-dir", str(tmp_path), "--json") == 0
    info = json.loads(capsys.readouterr().out)
    assert info["rmse"] < info["initial_rmse"]
    from tcscale.sim import SimParams

    SimParams.from_json(json.loads((tmp_path / "sim_params.json").read_text()))


def test_report_command(tmp_path, capsys):
    assert run("report", "--format", "csv", "--resamples", "200") == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("budget_min,") and len(out.splitlines()) == 9
    assert run("report", "--save", "--output-dir", str(tmp_path), "--resamples", "200") == 0
    assert json.loads((tmp_path / "report.json").read_text())["schema_version"] == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "tcscale", "plan", "--budget", "8h", "--json"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["recommendations"][0]["snapped_depth"] == 20
    r = subprocess.run([sys.executable, "-m", "tcscale", "plan", "--budget", "soon"], capture_output=True, text=True)
    assert r.returncode == 2 and "usage" in r.stderr
