import json

import numpy as np
import pytest

from ballistic_lab.cli.records import (
    meta_path,
    read_checkpoint,
    read_meta,
    read_samples,
    record_to_sample,
    sample_to_record,
    write_checkpoint,
    write_csv,
    write_jsonl,
    write_meta,
)
from ballistic_lab.config import SCHEMA_VERSION
from ballistic_lab.errors import SchemaError


def test_sample_record_round_trip(small_samples):
    sample = small_samples[3]
    rec = sample_to_record(sample, 3)
    assert rec["replica"] == 3
    assert rec["heights"][len(rec["heights"]) // 2] == 0
    again = record_to_sample(json.loads(json.dumps(rec)))
    assert np.array_equal(again.heights, sample.heights)
    assert again.raw_origin == sample.raw_origin
    assert again.seed == sample.seed
    assert again.params == sample.params


def test_record_schema_checks(ramp_sample):
    rec = dict(sample_to_record(ramp_sample, 0))
    with pytest.raises(SchemaError):
        record_to_sample({**rec, "schema_version": SCHEMA_VERSION + 1})
    with pytest.raises(SchemaError):
        record_to_sample({**rec, "heights": [0, 0]})
    with pytest.raises(SchemaError):
        record_to_sample({**rec, "heights": [0, 1, 2]})
    del rec["window"]
    with pytest.raises(SchemaError):
        record_to_sample(rec)


def test_jsonl_is_deterministic(tmp_path, small_samples):
    records = [sample_to_record(s, i) for i, s in enumerate(small_samples[:5])]
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert write_jsonl(a, records) == 5
    write_jsonl(b, records)
    assert a.read_bytes() == b.read_bytes()
    assert len(read_samples(a)) == 5


def test_read_rejects_garbage(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("{not json}\n")
    with pytest.raises(SchemaError):
        read_samples(path)


def test_meta_sidecar(tmp_path):
    out = tmp_path / "s.jsonl"
    meta = {
        "schema_version": SCHEMA_VERSION,
        "kind": "samples",
        "config": {"d": 1},
        "seed_mixer": "splitmix64",
        "records": 0,
    }
    assert write_meta(out, meta) == tmp_path / "s.jsonl.meta.json"
    assert meta_path(out).exists()
    assert read_meta(out) == meta


def test_write_csv(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, [{"a": 1, "b": 2}, {"a": 3, "b": 4}])
    assert path.read_text() == "a,b\n1,2\n3,4\n"
    write_csv(path, [], header=["x"])
    assert path.read_text() == "x\n"


def test_checkpoint_kind_checked(tmp_path):
    path = tmp_path / "run.ckpt.json"
    state = {
        "schema_version": SCHEMA_VERSION,
        "kind": "simulate",
        "config": {},
        "chain": {"events": 4},
        "output_offset": 10,
    }
    write_checkpoint(path, state)
    assert read_checkpoint(path, "simulate") == state
    with pytest.raises(SchemaError):
        read_checkpoint(path, "sample")
    path.write_text("[")
    with pytest.raises(SchemaError):
        read_checkpoint(path, "simulate")
