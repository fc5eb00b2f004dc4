"""Full-size verification runs. Deselected by default; run with ``pytest -m slow``."""

import csv
import json

import pytest

from ballistic_lab.cli import main
from ballistic_lab.cli.records import read_samples

pytestmark = pytest.mark.slow


def _suite(tmp_path, *args):
    out = tmp_path / "report.json"
    status = main(["test", *args, "--out", str(out)])
    return status, json.loads(out.read_text())


@pytest.mark.parametrize("suite", ["oracles", "invariance", "cluster", "growth"])
def test_suite_passes_on_presets(tmp_path, suite):
    status, report = _suite(tmp_path, suite)
    failed = [r["name"] for r in report["reports"] if r["decision"] == "fail"]
    assert status == 0, failed


def test_stationarity_headline_run(tmp_path):
    status, report = _suite(
        tmp_path, "stationarity", "--box-n", "200", "--p", "5e-4", "--replicas", "2000"
    )
    assert status == 0
    (stationarity,) = report["reports"]
    assert stationarity["sample_sizes"] == [2000, 2000]


def test_stationarity_negative_control(tmp_path):
    status, report = _suite(
        tmp_path, "stationarity", "--box-n", "200", "--p", "0.5", "--replicas", "2000", "--force"
    )
    assert status == 1
    assert report["passed"] is False
    (control,) = report["reports"]
    assert control["tv_distance"] > 0.10


def test_profile_window_of_eighty_one_sites(tmp_path):
    out = tmp_path / "profile.jsonl"
    args = ["sample", "--box-n", "1000", "--p", "1e-4", "--window", "40", "--seed", "2"]
    assert main([*args, "--out", str(out)]) == 0
    (sample,) = read_samples(out)
    assert sample.heights.shape == (81,)
    assert sample.value((0,)) == 0

    table = tmp_path / "profile.csv"
    assert main([*args, "--format", "csv", "--out", str(table)]) == 0
    with open(table, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 81
    assert [int(r["u"]) for r in rows] == sample.heights.tolist()
