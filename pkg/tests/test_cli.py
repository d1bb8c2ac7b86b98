"""End-to-end command-line checks: each subcommand writes its artifacts and
round-trips through the package readers."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from cicap.cli import main
from cicap.ingest import CarFollowRecord, write_records_csv
from cicap.optimize import read_curve_csv
from cicap.analytics import read_surface_csv
from cicap.simcore import read_sweep_csv, read_trajectory_csv
from cicap.stats import read_histogram_csv


def run_cli(*argv):
    return main([str(a) for a in argv])


# --- simulate -------------------------------------------------------------------


def test_simulate_writes_trajectory_and_fit(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code = run_cli(
        "simulate", "--v-lead", "50kmh", "--eta", "1.5", "--duration", "60",
        "--sigma-d", "0.3", "--seed", "7", "--bins", "20", "--out", out,
    )
    assert code == 0
    traj = read_trajectory_csv(out)
    assert len(traj) == 600
    assert traj.gap[0] == pytest.approx(21.1546, abs=1e-3)  # equilibrium start
    hist, expected = read_histogram_csv(tmp_path / "traj.hist.csv")
    assert len(hist.counts) == 20 and hist.n == 500  # warmup discarded
    fit = json.loads((tmp_path / "traj.fit.json").read_text())
    assert set(fit) == {"mu", "var", "n", "nrmse"}
    assert fit["n"] == 500 and fit["mu"] == pytest.approx(21.15, abs=0.5)
    assert "nrmse=" in capsys.readouterr().out


def test_simulate_zero_noise_fit_reports_negligible_variance(tmp_path):
    out = tmp_path / "quiet.csv"
    code = run_cli(
        "simulate", "--v-lead", "50kmh", "--duration", "30", "--out", out,
    )
    assert code == 0
    fit = json.loads((tmp_path / "quiet.fit.json").read_text())
    assert fit["mu"] == pytest.approx(21.1546, abs=1e-3)
    assert fit["var"] < 1e-12  # equilibrium start, no noise: only float jitter


# --- table1 ---------------------------------------------------------------------


def test_table1_nrmse_csv(tmp_path):
    out = tmp_path / "table.csv"
    code = run_cli(
        "table1", "--sigma-set", "0.1,1", "--duration", "300", "--reps", "2",
        "--seed", "5", "--out", out,
    )
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["var_d", "var_dv", "var_acc", "nrmse", "n_samples", "n_runs", "seed"]
    assert len(rows) == 9  # header + 2^3 cells
    combos = [(float(r[0]), float(r[1]), float(r[2])) for r in rows[1:]]
    assert len(set(combos)) == 8
    assert all(0 < float(r[3]) < 1 for r in rows[1:])
    assert all(int(r[4]) == 2 * 2700 and int(r[5]) == 2 for r in rows[1:])


def test_table1_single_level_single_cell_and_deterministic(tmp_path):
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    for path in (first, second):
        code = run_cli(
            "table1", "--sigma-set", "0.1", "--duration", "120", "--reps", "1",
            "--out", path,
        )
        assert code == 0
    assert first.read_bytes() == second.read_bytes()
    with open(first, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 2  # header + 1 cell


# --- sweep-variance --------------------------------------------------------------


def test_sweep_variance_csv_and_fit_json(tmp_path):
    out = tmp_path / "sweep.csv"
    fits = tmp_path / "fits.json"
    code = run_cli(
        "sweep-variance", "--v", "40:60:2kmh", "--eta", "1:2:2",
        "--sigma-d", "0.3", "--sigma-dv", "0", "--sigma-acc", "0",
        "--duration", "20", "--reps", "2", "--out", out, "--fits", fits,
    )
    assert code == 0
    cells = read_sweep_csv(out)
    assert len(cells) == 8  # 2 speeds x 2 headways x 2 replications
    assert {round(c.v, 4) for c in cells} == {round(40 / 3.6, 4), round(60 / 3.6, 4)}
    assert {c.seed for c in cells} == {0, 1}
    payload = json.loads(fits.read_text())
    assert payload["cells"] == 8
    assert payload["kept"] <= 4  # replications pooled per cell
    if "best_form" in payload:  # at least 3 collision-free cells
        assert len(payload["fits"]) == 9
        assert payload["best_r2"] <= 1.0


# --- capacity --------------------------------------------------------------------


def test_capacity_point_json(tmp_path):
    out = tmp_path / "point.json"
    code = run_cli("capacity", "--v", "50kmh", "--eta", "1.5", "--out", out)
    assert code == 0
    data = json.loads(out.read_text())
    assert data["p"] == pytest.approx(1.1891284777522184e-77, rel=1e-9)
    assert data["log10_p"] == pytest.approx(-76.924771220095806, rel=1e-12)
    assert data["s_plus"] == pytest.approx(1 / 1.5, rel=1e-12)


def test_capacity_grid_csv(tmp_path):
    out = tmp_path / "surface.csv"
    code = run_cli(
        "capacity", "--v", "40kmh,50kmh", "--eta", "1:2:3", "--out", out
    )
    assert code == 0
    rows = read_surface_csv(out)
    assert len(rows) == 6
    assert rows[0]["eta"] == 1.0 and rows[2]["eta"] == 2.0


def test_capacity_grid_requires_out_path(capsys):
    code = run_cli("capacity", "--v", "40kmh,50kmh", "--eta", "1.5")
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_capacity_rejects_bad_clearance_model(capsys):
    code = run_cli("capacity", "--v", "50kmh", "--eta", "1.5",
                   "--tct", "quadratic")
    assert code == 1
    assert "clearance model" in capsys.readouterr().err


# --- optimize --------------------------------------------------------------------


def test_optimize_capacity_json_and_curve(tmp_path):
    out = tmp_path / "opt.json"
    curve_out = tmp_path / "curve.csv"
    code = run_cli(
        "optimize", "--objective", "capacity", "--p-hat", "1e-8",
        "--v-min", "20kmh", "--v-max", "100kmh", "--curve", "4",
        "--curve-out", curve_out, "--out", out,
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert data["status"] == "optimal"
    assert data["v_opt"] == pytest.approx(100 / 3.6, rel=1e-12)
    assert data["binding"] in ("constraint-binding", "interior-stationary")
    assert data["report"]["s"] > 0
    assert len(read_curve_csv(curve_out)) == 4


def test_optimize_collision_meets_demand_in_vph(tmp_path):
    out = tmp_path / "opt.json"
    code = run_cli(
        "optimize", "--objective", "collision", "--s-hat", "1800vph",
        "--v-max", "100kmh", "--out", out,
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert data["status"] == "optimal"
    assert data["report"]["s"] == pytest.approx(0.5, rel=1e-9)  # 1800 veh/h


def test_optimize_infeasible_demand_is_well_formed(tmp_path):
    out = tmp_path / "opt.json"
    code = run_cli(
        "optimize", "--objective", "collision", "--s-hat", "20", "--out", out
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert data["status"] == "infeasible"
    assert data["report"] is None and data["v_opt"] is None
    assert data["s_max"] > 0


def test_optimize_capacity_requires_p_hat(capsys):
    code = run_cli("optimize", "--objective", "capacity")
    assert code == 1
    assert "p-hat" in capsys.readouterr().err


# --- validate --------------------------------------------------------------------


def test_validate_semi_markov_json(tmp_path):
    out = tmp_path / "sm.json"
    code = run_cli(
        "validate", "--mode", "semi-markov", "--p-transition", "0.1",
        "--T", "10", "--tau", "1.0", "--horizon", "20000", "--runs", "4",
        "--out", out,
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert data["closed_form"] == pytest.approx(0.5, rel=1e-12)
    assert abs(data["occupancy_mean"] - 0.5) < 0.05
    assert data["n_runs"] == 4


def test_validate_spacetime_json_and_events(tmp_path):
    out = tmp_path / "st.json"
    events = tmp_path / "events.csv"
    code = run_cli(
        "validate", "--mode", "spacetime", "--L", "600", "--tau", "0.5",
        "--tct", "fixed:900", "--v", "50kmh", "--eta", "1.5",
        "--sigma-o", "0.19", "--runs", "1", "--seed", "5",
        "--events-out", events, "--out", out,
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert data["n_runs"] == 1 and len(data["per_run"]) == 1
    assert data["throughput_mean"] > 0
    with open(events, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["run", "t_c", "x_c", "lane"]
    assert len(rows) - 1 == data["events"]


def test_validate_compare_json(tmp_path):
    out = tmp_path / "cmp.json"
    code = run_cli(
        "validate", "--mode", "compare", "--scenario", "baseline",
        "--L", "600", "--tau", "0.5", "--tct", "fixed:900",
        "--v", "50kmh", "--eta", "1.5", "--sigma-o", "0.19",
        "--runs", "2", "--seed", "1", "--out", out,
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert data["scenario"] == "baseline"
    assert data["rel_gap"] < 0.05


def test_validate_compare_curve_csv(tmp_path):
    out = tmp_path / "cmp.json"
    curve = tmp_path / "curves.csv"
    code = run_cli(
        "validate", "--mode", "compare", "--scenario", "baseline",
        "--L", "600", "--tau", "0.5", "--tct", "fixed:900",
        "--v", "50kmh", "--eta", "1.5", "--sigma-o", "0.19",
        "--runs", "1", "--seed", "1", "--out", out,
        "--compare-out", curve, "--eta-grid", "1.5:3:4",
    )
    assert code == 0
    with open(curve, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["eta", "s_baseline", "s_overlap", "s_two_lane"]
    assert len(rows) == 5
    etas = [float(r[0]) for r in rows[1:]]
    assert etas == pytest.approx([1.5, 2.0, 2.5, 3.0])
    baselines = [float(r[1]) for r in rows[1:]]
    assert all(s > 0 for s in baselines)
    assert baselines == sorted(baselines, reverse=True)  # s falls as eta grows


def test_validate_rejects_unknown_mode():
    with pytest.raises(SystemExit) as exc:
        run_cli("validate", "--mode", "quantum")
    assert exc.value.code == 2  # argparse usage error


# --- ingest ----------------------------------------------------------------------


def _write_sample_records(path):
    rng = np.random.default_rng(11)
    records = []
    for case in range(3):
        gaps = rng.normal(20.0, 0.5, 30)
        records += [
            CarFollowRecord(case_id=f"c{case}", t=0.1 * k, gap=float(g),
                            v_lead=14.0, v_follow=14.0, a_follow=0.0)
            for k, g in enumerate(gaps)
        ]
    write_records_csv(records, path)
    return records


def test_ingest_pipeline_outputs(tmp_path):
    src = tmp_path / "records.csv"
    _write_sample_records(src)
    out = tmp_path / "pooled.csv"
    summary = tmp_path / "summary.json"
    code = run_cli(
        "ingest", "--in", src, "--v-lead", "14", "--bins", "8",
        "--out", out, "--summary", summary,
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "z" and len(lines) == 91  # header + 90 samples
    data = json.loads(summary.read_text())
    assert data["filter"]["cases_kept"] == 3
    assert data["pooled_samples"] == 90
    assert abs(data["pooled_mean"]) < 1e-9
    assert data["pooled_std"] == pytest.approx(1.0, abs=1e-9)
    assert set(data["gaussian_fit"]) == {"mu", "var", "n", "nrmse"}
    assert data["gaussian_fit"]["n"] == 90
    assert data["rejected_cases"] == [] and data["dropped_cases"] == []


def test_ingest_missing_column_is_usage_error(tmp_path, capsys):
    src = tmp_path / "bad.csv"
    src.write_text("not,a,record,header,at,all\n")
    code = run_cli("ingest", "--in", src, "--v-lead", "14",
                   "--out", tmp_path / "x.csv")
    assert code == 2
    assert "case_id" in capsys.readouterr().err


def test_ingest_bad_row_is_runtime_error(tmp_path, capsys):
    src = tmp_path / "bad_row.csv"
    src.write_text(
        "case_id,t,gap,v_lead,v_follow,a_follow\n"
        "c1,0.0,not-a-number,14.0,14.0,0.0\n"
    )
    code = run_cli("ingest", "--in", src, "--v-lead", "14",
                   "--out", tmp_path / "x.csv")
    assert code == 1
    assert "line 2" in capsys.readouterr().err


# --- console entry point -----------------------------------------------------------


def test_console_script_smoke(tmp_path):
    out = tmp_path / "point.json"
    proc = subprocess.run(
        ["cicap", "capacity", "--v", "50kmh", "--eta", "1.5", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["s_plus"] == pytest.approx(1 / 1.5)


def test_stdout_default_for_json(capsys):
    code = run_cli("capacity", "--v", "50kmh", "--eta", "1.5")
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["T"] == pytest.approx(2550.0, rel=1e-12)
