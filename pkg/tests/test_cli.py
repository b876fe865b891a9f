import json
import os

import numpy as np
import pytest

from lambda_landscape.cli import main


def read(path):
    with open(path, "rb") as handle:
        return handle.read()


def test_optimize_transfer_recipe(tmp_path):
    out = tmp_path / "run"
    rc = main(
        [
            "optimize",
            "--lambda", "0",
            "--tol", "1e-5",
            "--max-iter", "2000",
            "--out", str(out),
        ]
    )
    assert rc == 0
    record = json.loads(read(out / "run.json"))
    assert record["succeeded"] is True
    assert record["final_objective"] >= 1.0 - 1e-5
    lines = read(out / "trajectory.csv").decode().strip().splitlines()
    assert lines[0] == "iteration,J,grad_norm"
    assert len(lines) == record["iterations_used"] + 2  # header + iterate rows
    # Full-precision round trip: the last CSV row reproduces the final J.
    last = lines[-1].split(",")
    assert int(last[0]) == record["iterations_used"]
    assert float(last[1]) == record["final_objective"]


def test_optimize_zero_start_exits_two(tmp_path):
    rc = main(
        [
            "optimize",
            "--initial", "zero",
            "--max-iter", "20",
            "--out", str(tmp_path / "zero"),
        ]
    )
    assert rc == 2
    record = json.loads(read(tmp_path / "zero" / "run.json"))
    assert record["succeeded"] is False
    assert record["final_objective"] == 0.0
    assert record["run_seed"] is None


def test_optimize_plot_renders_figure(tmp_path):
    out = tmp_path / "plotted"
    rc = main(
        [
            "optimize",
            "--initial", "zero",
            "--max-iter", "3",
            "--plot",
            "--out", str(out),
        ]
    )
    assert rc == 2
    assert (out / "trajectory.png").stat().st_size > 0


def test_malformed_config_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("run: [unclosed\n")
    rc = main(["optimize", "--config", str(bad), "--out", str(tmp_path)])
    assert rc == 1
    assert "config error" in capsys.readouterr().err


def test_unknown_config_key_exits_one(tmp_path, capsys):
    bad = tmp_path / "typo.yaml"
    bad.write_text("run:\n  max_iters: 10\n")
    rc = main(["optimize", "--config", str(bad), "--out", str(tmp_path)])
    assert rc == 1
    assert "max_iters" in capsys.readouterr().err


def test_invalid_flag_exits_one(capsys):
    assert main(["optimize", "--no-such-flag"]) == 1
    assert main(["frobnicate"]) == 1


def test_invalid_run_values_exit_one(tmp_path, capsys):
    assert main(["ensemble", "--runs", "0", "--out", str(tmp_path)]) == 1
    assert "run.runs" in capsys.readouterr().err
    short = tmp_path / "short.yaml"
    short.write_text("run:\n  total_time: 1.0\n")
    assert main(["perturb", "--config", str(short)]) == 1
    assert "horizon" in capsys.readouterr().err


def test_run_record_seed_round_trip(tmp_path):
    # The emitted record carries the derived run seed and the full initial
    # control; regenerating the control from that seed reproduces it exactly.
    from lambda_landscape.experiments import random_control

    out = tmp_path / "seeded"
    assert (
        main(
            [
                "optimize",
                "--initial", "random",
                "--max-iter", "4",
                "--seed", "31415",
                "--out", str(out),
            ]
        )
        in (0, 2)
    )
    record = json.loads(read(out / "run.json"))
    rebuilt = random_control(1.0, 200, 10.0, record["run_seed"])
    assert record["initial_control"]["amplitudes"] == rebuilt.amplitudes.tolist()
    assert record["initial_control"]["durations"] == rebuilt.durations.tolist()


def test_ensemble_outputs_and_determinism(tmp_path):
    args = [
        "ensemble",
        "--lambda", "0",
        "--tol", "1e-5",
        "--max-iter", "2000",
        "--runs", "4",
        "--seed", "2718",
        "--c0", "1.0",
    ]
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(first)]) == 0
    assert main(args + ["--out", str(second)]) == 0
    for name in ("ensemble.json", "hist_iterations.csv", "hist_initial_objective.csv"):
        assert read(first / name) == read(second / name)
    for name in ("hist_iterations.csv", "hist_initial_objective.csv"):
        lines = read(first / name).decode().strip().splitlines()
        assert lines[0] == "bin_left,bin_right,count"
        assert len(lines) == 26  # header + 25 bins
    summary = json.loads(read(first / "ensemble.json"))
    assert summary["runs"] == 4
    assert summary["n_fail"] == 0
    assert len(summary["run_seeds"]) == 4


def test_ensemble_histogram_counts_sum_to_runs(tmp_path):
    out = tmp_path / "ens"
    assert (
        main(
            [
                "ensemble",
                "--runs", "5",
                "--c0", "0.3",
                "--max-iter", "15",
                "--out", str(out),
                "--seed", "11",
            ]
        )
        == 0
    )
    lines = read(out / "hist_initial_objective.csv").decode().strip().splitlines()
    counts = [int(line.split(",")[2]) for line in lines[1:]]
    assert sum(counts) == 5


def test_sweep_outputs(tmp_path):
    config = tmp_path / "sweep.yaml"
    config.write_text(
        "run:\n"
        "  c0_list: [0.3, 1.0]\n"
        "  runs: 2\n"
        "  segments: 40\n"
        "  max_iterations: 40\n"
    )
    out = tmp_path / "sweep"
    rc = main(["sweep", "--config", str(config), "--seed", "5", "--out", str(out)])
    assert rc == 0
    lines = read(out / "sweep.csv").decode().strip().splitlines()
    assert lines[0] == "c0,n_fail_grape,n_fail_bfgs,mean_iters_grape"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert float(first[0]) == 0.3
    assert 0 <= int(first[1]) <= 2 and 0 <= int(first[2]) <= 2


def test_sweep_empty_c0_list_is_header_only(tmp_path):
    config = tmp_path / "empty.yaml"
    config.write_text("run:\n  c0_list: []\n")
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(config), "--out", str(out)]) == 0
    assert read(out / "sweep.csv").decode() == "c0,n_fail_grape,n_fail_bfgs,mean_iters_grape\n"


def test_verify_default_system_passes(tmp_path, capsys):
    out = tmp_path / "verify"
    rc = main(["verify", "--out", str(out)])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 5
    assert all(line.startswith("PASS") for line in lines)
    report = json.loads(read(out / "verify.json"))
    assert report["all_passed"] is True
    assert len(report["checks"]) == 5


def test_verify_injected_coupling_fails_structural_check(capsys):
    rc = main(["verify", "--v12", "0.5"])
    assert rc == 2
    lines = capsys.readouterr().out.strip().splitlines()
    failed = [line for line in lines if line.startswith("FAIL")]
    assert any("second_order_structural_zero" in line for line in failed)


def test_verify_impossible_tolerance_fails(capsys):
    rc = main(["verify", "--check-tol", "0"])
    assert rc == 2
    lines = capsys.readouterr().out.strip().splitlines()
    assert any(line.startswith("FAIL first_order_cancellation") for line in lines)


def test_perturb_prints_terms(capsys):
    rc = main(["perturb", "--alpha", "0.01"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["delta_J_predicted"] > 0.0
    assert abs(payload["A1"]["real"]) < 1e-12 and abs(payload["A1"]["imag"]) < 1e-12
    magnitude = np.hypot(payload["B2"]["real"], payload["B2"]["imag"])
    assert magnitude == pytest.approx(2.1557281036023483e-4, rel=1e-9)


def test_perturb_reads_pulse_file(tmp_path, capsys):
    pulse = tmp_path / "pulse.csv"
    pulse.write_text("duration,amplitude\n2.0,0.05\n8.0,-0.01\n")
    rc = main(["perturb", "--pulse", str(pulse)])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["pulse"]["durations"] == [2.0, 8.0]
    assert payload["objective"] is not None


def test_perturb_bad_pulse_file_exits_one(tmp_path, capsys):
    pulse = tmp_path / "pulse.csv"
    pulse.write_text("time,value\n1.0,0.1\n")
    assert main(["perturb", "--pulse", str(pulse)]) == 1
    assert "duration,amplitude" in capsys.readouterr().err


def test_sweep_plot_renders_figure(tmp_path):
    config = tmp_path / "sweep.yaml"
    config.write_text(
        "run:\n  c0_list: [1.0]\n  runs: 1\n  segments: 20\n  max_iterations: 10\n"
    )
    out = tmp_path / "plot"
    rc = main(["sweep", "--config", str(config), "--plot", "--out", str(out)])
    assert rc == 0
    assert (out / "sweep.png").stat().st_size > 0


def test_shipped_configs_load():
    from pathlib import Path

    from lambda_landscape.config import load_config

    config_dir = Path(__file__).resolve().parent.parent / "configs"
    paths = sorted(config_dir.glob("*.yaml"))
    assert len(paths) == 3
    for path in paths:
        config = load_config(str(path))
        config.check_run_values()
        config.build_system()


def test_ensemble_plot_renders_figure(tmp_path):
    out = tmp_path / "ens-plot"
    rc = main(
        [
            "ensemble",
            "--runs", "2",
            "--max-iter", "5",
            "--plot",
            "--out", str(out),
            "--seed", "5",
        ]
    )
    assert rc == 0
    assert (out / "ensemble.png").stat().st_size > 0
