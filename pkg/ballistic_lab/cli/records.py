"""
On-disk formats.

Samples are JSON Lines, one ``SampleRecord`` per replica, written with sorted keys so identical
runs give identical bytes. Every output file ``<out>`` gets a sidecar ``<out>.meta.json`` with
the full run configuration. Plot tables are CSV with one header row.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Sequence, Union

import numpy as np
from typing_extensions import NotRequired, TypedDict

from ..config import SCHEMA_VERSION, SEED_MIXER
from ..errors import SchemaError
from ..lattice import BoxSpec, CenteredSample

__all__ = [
    "SampleRecord",
    "MetaRecord",
    "CheckpointRecord",
    "sample_to_record",
    "record_to_sample",
    "write_jsonl",
    "read_jsonl",
    "read_samples",
    "meta_path",
    "write_meta",
    "read_meta",
    "write_csv",
    "write_json",
    "write_checkpoint",
    "read_checkpoint",
]

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class SampleRecord(TypedDict):
    schema_version: int
    d: int
    N: int
    sampler: Dict[str, Any]
    replica: int
    seed: int
    n_updates: int
    window: int
    heights: List[int]
    raw_origin: int
    elapsed_time: NotRequired[float]
    seed_mixer: NotRequired[str]


class MetaRecord(TypedDict):
    schema_version: int
    kind: str
    config: Dict[str, Any]
    seed_mixer: str
    records: int
    validation: NotRequired[Dict[str, Any]]
    summary: NotRequired[Dict[str, Any]]


class CheckpointRecord(TypedDict):
    schema_version: int
    kind: str
    config: Dict[str, Any]
    chain: Dict[str, Any]
    output_offset: int


def _check_version(data: Mapping[str, Any], what: str) -> None:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{what} has schema version {version!r}, expected {SCHEMA_VERSION}")


def sample_to_record(sample: CenteredSample, replica: int) -> SampleRecord:
    rec: SampleRecord = {
        "schema_version": SCHEMA_VERSION,
        "d": sample.d,
        "N": sample.box.N,
        "sampler": dict(sample.params),
        "replica": replica,
        "seed": int(sample.seed or 0),
        "n_updates": int(sample.n_updates or 0),
        "window": sample.window,
        "heights": sample.flat().tolist(),
        "raw_origin": int(sample.raw_origin),
        "seed_mixer": SEED_MIXER,
    }
    if sample.elapsed_time is not None:
        rec["elapsed_time"] = float(sample.elapsed_time)
    return rec


def record_to_sample(rec: Mapping[str, Any]) -> CenteredSample:
    _check_version(rec, "sample record")
    try:
        d, N, W = int(rec["d"]), int(rec["N"]), int(rec["window"])
        heights = rec["heights"]
    except KeyError as exc:
        raise SchemaError(f"sample record is missing {exc}") from exc
    window_box = BoxSpec(d, W)
    if len(heights) != window_box.size:
        raise SchemaError(f"{len(heights)} heights for a window of {window_box.size} sites")
    if heights[window_box.size // 2] != 0:
        raise SchemaError("origin entry of a centered sample must be 0")
    return CenteredSample(
        box=BoxSpec(d, N),
        window=W,
        heights=np.asarray(heights, dtype=np.int64).reshape(window_box.shape),
        raw_origin=int(rec.get("raw_origin", 0)),
        n_updates=int(rec["n_updates"]),
        elapsed_time=rec.get("elapsed_time"),
        seed=int(rec["seed"]),
        params=dict(rec.get("sampler", {})),
    )


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_jsonl(path: PathLike, records: Iterable[Mapping[str, Any]]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(_dumps(rec) + "\n")
            n += 1
    return n


def read_jsonl(path: PathLike) -> Iterator[Dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: not a JSON record") from exc


def read_samples(path: PathLike) -> List[CenteredSample]:
    return [record_to_sample(rec) for rec in read_jsonl(path)]


def meta_path(out: PathLike) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".meta.json")


def write_json(path: PathLike, obj: Any) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def write_meta(out: PathLike, meta: MetaRecord) -> Path:
    path = meta_path(out)
    write_json(path, meta)
    return path


def read_meta(out: PathLike) -> MetaRecord:
    with open(meta_path(out), encoding="utf-8") as fh:
        meta = json.load(fh)
    _check_version(meta, "metadata")
    return meta


def write_csv(
    path: PathLike, rows: Sequence[Mapping[str, Any]], header: Sequence[str] = ()
) -> int:
    """Write ``rows`` under one header row (``header`` or the keys of the first row)."""
    columns = list(header) or (list(rows[0]) if rows else [])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return len(rows)


def write_checkpoint(path: PathLike, state: CheckpointRecord) -> None:
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(_dumps(state))
    tmp.replace(path)
    logger.info("checkpoint at event %d written to %s", state["chain"]["events"], path)


def read_checkpoint(path: PathLike, kind: str) -> CheckpointRecord:
    with open(path, encoding="utf-8") as fh:
        try:
            state = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path} is not a checkpoint") from exc
    _check_version(state, "checkpoint")
    if state.get("kind") != kind:
        raise SchemaError(f"{path} is a {state.get('kind')!r} checkpoint, expected {kind!r}")
    for key in ("config", "chain", "output_offset"):
        if key not in state:
            raise SchemaError(f"checkpoint is missing {key!r}")
    return state
