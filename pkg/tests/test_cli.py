import csv
import json

import pytest

from extremal_linkage.cli import (
    EXIT_OK, EXIT_USAGE, ExperimentConfig, UsageError, config_from_args, main, run)


def _scan_args(out, workers=1, seed=7):
    return ["--cmd", "scan", "--delta", "1.0", "--n", "64", "--n", "128", "--n", "256",
            "--reps", "100", "--seed", str(seed), "--out", str(out), "--workers", str(workers)]


def test_scan_is_bit_identical_across_runs_and_workers(tmp_path):
    assert main(_scan_args(tmp_path / "a")) == EXIT_OK
    assert main(_scan_args(tmp_path / "b")) == EXIT_OK
    assert main(_scan_args(tmp_path / "c", workers=2)) == EXIT_OK
    a = (tmp_path / "a" / "scan.csv").read_bytes()
    assert a == (tmp_path / "b" / "scan.csv").read_bytes()
    assert a == (tmp_path / "c" / "scan.csv").read_bytes()
    fit = json.loads((tmp_path / "a" / "fit.json").read_text())
    assert fit["regime"] == "LOG_N"
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["config"]["reps"] == 100 and "scan.csv" in manifest["files"]


def test_scan_rows_sorted_by_n_then_seed(tmp_path):
    main(_scan_args(tmp_path))
    with open(tmp_path / "scan.csv") as fh:
        rows = list(csv.DictReader(fh))
    keys = [(int(r["n"]), int(r["seed"])) for r in rows]
    assert keys == sorted(keys) and len(rows) == 300


def test_different_seed_changes_output(tmp_path):
    main(_scan_args(tmp_path / "a", seed=1))
    main(_scan_args(tmp_path / "b", seed=2))
    assert (tmp_path / "a" / "scan.csv").read_bytes() != (tmp_path / "b" / "scan.csv").read_bytes()


@pytest.mark.parametrize("argv", [
    ["--cmd", "scan", "--n", "64", "--reps", "0"],
    ["--cmd", "scan", "--n", "64", "--delta", "-1"],
    ["--cmd", "scan"],
    ["--cmd", "bogus"],
    ["--n", "64"],
    ["--cmd", "coalesce", "--n", "0"],
    ["--cmd", "degree", "--variant", "torus"],
])
def test_usage_errors_exit_one(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_USAGE


def test_unwritable_output_exits_two(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["--cmd", "coalesce", "--n", "16", "--reps", "2", "--out", str(blocker / "sub")]) == 2


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"cmd": "coalesce", "delta": 0.5, "n_values": [32], "reps": 5}))
    c = config_from_args(["--config", str(cfg), "--reps", "7"])
    assert c.reps == 7 and c.delta == 0.5 and c.n_values == [32]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"cmd": "scan", "nope": 1}))
    with pytest.raises(UsageError):
        config_from_args(["--config", str(bad)])


def test_coalesce_writes_traces(tmp_path):
    rc = main(["--cmd", "coalesce", "--n", "50", "--reps", "3", "--trace", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    assert (tmp_path / "trace_n50_r2.csv").exists()
    lines = (tmp_path / "coalescence.csv").read_text().splitlines()
    assert lines[0] == "delta,n,seed,h_n,censored" and len(lines) == 4


def test_censoring_sets_exit_four(tmp_path):
    rc = main(["--cmd", "coalesce", "--delta", "3", "--n", "128", "--reps", "20", "--cap", "1",
               "--out", str(tmp_path)])
    assert rc == 4
    rows = list(csv.DictReader(open(tmp_path / "coalescence.csv")))
    assert any(r["censored"] == "1" and r["h_n"] == "" for r in rows)


def test_degree_limit_and_torus(tmp_path):
    assert main(["--cmd", "degree", "--reps", "20000", "--out", str(tmp_path / "l")]) == EXIT_OK
    assert (tmp_path / "l" / "tail_limit-exact.csv").exists()
    assert main(["--cmd", "degree", "--variant", "torus", "--n", "100", "--reps", "50",
                 "--workers", "2", "--out", str(tmp_path / "t")]) == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "t" / "degree_samples.csv")))
    assert len(rows) == 50 and rows[0]["variant"] == "torus"


def test_limit_walk(tmp_path):
    assert main(["--cmd", "limit-walk", "--reps", "3", "--h-max", "50", "--out", str(tmp_path)]) == EXIT_OK
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert "mean_abs_dev_over_h23" in m["results"]
    assert len((tmp_path / "limit_walk.csv").read_text().splitlines()) == 1 + 3 * 51


def test_verify_quick(tmp_path, capsys):
    assert main(["--cmd", "verify", "--budget", "0.05", "--out", str(tmp_path)]) == EXIT_OK
    assert "[PASS] mu estimate" in capsys.readouterr().out


def test_validate_direct(tmp_path):
    with pytest.raises(UsageError):
        ExperimentConfig("scan", n_values=[16], workers=0).validate()
    manifest = run(ExperimentConfig("coalesce", n_values=[8], reps=2, out=str(tmp_path)))
    assert manifest.status == EXIT_OK
