import csv
import json
from unittest.mock import patch

import pytest

from ballistic_lab.cli import commands, main
from ballistic_lab.cli.records import read_meta, read_samples

SAMPLE_ARGS = ["sample", "--box-n", "12", "--p", "0.01", "--seed", "4"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def sample_file(tmp_path):
    out = tmp_path / "samples.jsonl"
    assert main([*SAMPLE_ARGS, "--replicas", "200", "--out", str(out)]) == 0
    return out


def test_sample_is_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main([*SAMPLE_ARGS, "--replicas", "3", "--out", str(a)]) == 0
    assert main([*SAMPLE_ARGS, "--replicas", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    meta = read_meta(a)
    assert meta["kind"] == "samples"
    assert meta["records"] == 3
    assert meta["config"]["seed"] == 4
    assert meta["validation"]["verdict"] == "valid"
    assert all(s.value((0,)) == 0 for s in read_samples(a))


def test_sample_csv_table(tmp_path):
    out = tmp_path / "s.csv"
    assert main([*SAMPLE_ARGS, "--window", "3", "--format", "csv", "--out", str(out)]) == 0
    rows = _rows(out)
    assert [r["x1"] for r in rows] == ["-3", "-2", "-1", "0", "1", "2", "3"]
    assert rows[3]["u"] == "0"
    assert rows[-1]["grad"] == ""


def test_zero_replicas_writes_metadata_only(tmp_path):
    out = tmp_path / "none.jsonl"
    assert main([*SAMPLE_ARGS, "--replicas", "0", "--out", str(out)]) == 0
    assert out.read_bytes() == b""
    assert read_meta(out)["records"] == 0


def test_out_of_window_needs_force(tmp_path, capsys):
    out = tmp_path / "bad.jsonl"
    args = ["sample", "--box-n", "1000", "--p", "0.01", "--out", str(out)]
    assert main(args) == 2
    assert "--force" in capsys.readouterr().err
    assert not out.exists()
    assert main([*args, "--force"]) == 0
    assert read_meta(out)["validation"]["forced"] is True


def test_invalid_config_exit_status(tmp_path, capsys):
    assert main(["sample", "--p", "0.01", "--dim", "0", "--out", str(tmp_path / "x")]) == 2
    assert capsys.readouterr().err.startswith("ballistic-lab: error:")
    with pytest.raises(SystemExit):
        main(["test", "speed"])


def _snapshots(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_simulate_single_site(tmp_path):
    out = tmp_path / "run.jsonl"
    assert main(["simulate", "--box-n", "0", "--steps", "5", "--out", str(out)]) == 0
    (final,) = _snapshots(out)
    assert final["heights"] == [5]
    assert final["events"] == 5
    assert read_meta(out)["summary"] == {"events": 5}


def test_simulate_zero_steps(tmp_path):
    out = tmp_path / "run.jsonl"
    assert main(["simulate", "--box-n", "2", "--steps", "0", "--out", str(out)]) == 0
    (final,) = _snapshots(out)
    assert final["heights"] == [0] * 5


def test_simulate_snapshot_stride(tmp_path):
    out = tmp_path / "run.jsonl"
    args = ["simulate", "--box-n", "3", "--steps", "25", "--checkpoint", "10", "--out", str(out)]
    assert main(args) == 0
    snaps = _snapshots(out)
    assert [s["events"] for s in snaps] == [10, 20, 25]
    assert not commands.checkpoint_path(out).exists()


def test_simulate_continuous_csv(tmp_path):
    out = tmp_path / "run.csv"
    args = ["simulate", "--box-n", "2", "--time", "1.5", "--format", "csv", "--out", str(out)]
    assert main(args) == 0
    rows = _rows(out)
    assert len(rows) == 5
    assert {r["time"] for r in rows} == {"1.5"}


def test_simulate_resume_gives_identical_bytes(tmp_path):
    base = ["simulate", "--box-n", "3", "--steps", "60", "--checkpoint", "10", "--seed", "11"]
    clean = tmp_path / "clean.csv"
    assert main([*base, "--format", "csv", "--out", str(clean)]) == 0

    out = tmp_path / "run.csv"
    real = commands.write_checkpoint
    calls = []

    def interrupt_on_second(path, state):
        real(path, state)
        calls.append(state["chain"]["events"])
        if len(calls) == 2:
            raise KeyboardInterrupt

    args = [*base, "--format", "csv", "--out", str(out)]
    with patch("ballistic_lab.cli.commands.write_checkpoint", side_effect=interrupt_on_second):
        with pytest.raises(KeyboardInterrupt):
            main(args)
    assert calls == [10, 20]
    assert commands.checkpoint_path(out).exists()

    assert main([*args, "--resume"]) == 0
    assert out.read_bytes() == clean.read_bytes()
    assert not commands.checkpoint_path(out).exists()


def test_resume_rejects_changed_config(tmp_path):
    out = tmp_path / "run.jsonl"
    args = ["simulate", "--box-n", "3", "--steps", "30", "--checkpoint", "10", "--out", str(out)]
    real = commands.write_checkpoint

    def interrupt(path, state):
        real(path, state)
        raise KeyboardInterrupt

    with patch("ballistic_lab.cli.commands.write_checkpoint", side_effect=interrupt):
        with pytest.raises(KeyboardInterrupt):
            main(args)
    assert main([*args, "--seed", "99", "--resume"]) == 2


def test_stats_alpha_single_site(tmp_path):
    out = tmp_path / "alpha.csv"
    args = ["stats", "alpha", "--box-n", "0", "--replicas", "400", "--time", "2", "--out"]
    assert main([*args, str(out)]) == 0
    header = out.read_text().splitlines()[0].split(",")
    assert header[:3] == ["t", "mean", "stderr"]
    assert header[3:] == ["beta_mean", "beta_stderr", "replicas"]
    rows = _rows(out)
    assert len(rows) == 11
    assert float(rows[0]["mean"]) == 0.0
    last = rows[-1]
    assert abs(float(last["mean"]) - 2.0) < 4 * float(last["stderr"])
    assert read_meta(out)["kind"] == "stats-alpha"


def test_stats_from_input(tmp_path, sample_file):
    tails = tmp_path / "tails.csv"
    assert main(["stats", "tails", "--input", str(sample_file), "--out", str(tails)]) == 0
    rows = _rows(tails)
    assert sum(int(r["count"]) for r in rows) == 200
    assert read_meta(tails)["summary"]["samples"] == 200

    corr = tmp_path / "corr.csv"
    assert main(["stats", "correlation", "--input", str(sample_file), "--out", str(corr)]) == 0
    rows = _rows(corr)
    assert [r["distance"] for r in rows] == ["0", "1", "2", "4", "8"]
    assert float(rows[0]["correlation"]) == 1.0


def test_stats_to_stdout(sample_file, capsys):
    assert main(["stats", "profile", "--input", str(sample_file)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "r,mean_abs,stderr"
    assert len(lines) == 5


def test_plot_writes_figure_and_table(tmp_path, sample_file):
    pytest.importorskip("matplotlib")
    out = tmp_path / "profile.png"
    assert main(["plot", "--input", str(sample_file), "--replica", "2", "--out", str(out)]) == 0
    assert out.stat().st_size > 0
    rows = _rows(out.with_suffix(".csv"))
    assert len(rows) == 25
    assert (rows[12]["x"], rows[12]["u"]) == ("0", "0")
    assert rows[-1]["grad"] == ""


def test_plot_rejects_missing_replica(tmp_path, sample_file):
    out = tmp_path / "profile.png"
    assert main(["plot", "--input", str(sample_file), "--replica", "500", "--out", str(out)]) == 2


def test_oracle_suite_passes(tmp_path, capsys):
    out = tmp_path / "oracles.json"
    assert main(["test", "oracles", "--quick", "--replicas", "2000", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"] is True
    names = [r["name"] for r in report["reports"]]
    assert "event-count-law" in names
    assert "exact-law-steps-5" in names
    assert "pass" in capsys.readouterr().out


def test_stationarity_negative_control_exits_nonzero(tmp_path):
    out = tmp_path / "neg.json"
    args = ["test", "stationarity", "--box-n", "20", "--p", "0.5", "--replicas", "300"]
    assert main([*args, "--out", str(out)]) == 2
    assert main([*args, "--force", "--out", str(out)]) == 1
    assert json.loads(out.read_text())["passed"] is False


def test_explicit_single_replica_is_honoured(tmp_path):
    out = tmp_path / "one.json"
    args = ["test", "stationarity", "--box-n", "10", "--p", "0.01", "--replicas", "1", "--force"]
    assert main([*args, "--out", str(out)]) in (0, 1)
    (report,) = json.loads(out.read_text())["reports"]
    assert report["sample_sizes"] == [1, 1]
