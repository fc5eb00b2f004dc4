"""Run configuration shared by every CLI command."""

import argparse
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Mapping, Optional

from ..errors import InvalidParameterError, SchemaError
from ..sampler import SamplerMode, SamplerParams

__all__ = ["RunConfig", "COMMANDS", "SUITES", "STAT_KINDS", "FORMATS"]

COMMANDS = ("sample", "simulate", "test", "stats", "plot")
SUITES = ("oracles", "stationarity", "invariance", "cluster", "growth")
STAT_KINDS = ("alpha", "correlation", "tails", "cluster-tail", "profile")
FORMATS = ("jsonl", "csv")


@dataclass
class RunConfig:
    """Everything a command needs; validated before any simulation starts.

    ``mode``/``value`` select the sampler (``--p``, ``--mean-time`` or ``--cesaro-t``),
    ``checkpoint`` is an event stride for snapshots and checkpoints, and ``suite``/``kind``
    pick what ``test`` and ``stats`` run.
    """

    command: str
    d: int = 1
    N: int = 10
    mode: Optional[str] = None
    value: Optional[float] = None
    T: Optional[float] = None
    steps: Optional[int] = None
    replicas: Optional[int] = None
    seed: int = 0
    window: Optional[int] = None
    out: Optional[str] = None
    format: str = "jsonl"
    checkpoint: Optional[int] = None
    force: bool = False
    resume: bool = False
    workers: int = 1
    suite: Optional[str] = None
    kind: Optional[str] = None
    input: Optional[str] = None
    replica: int = 0
    quick: bool = False

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise InvalidParameterError(f"unknown command {self.command!r}")
        if self.d < 1:
            raise InvalidParameterError(f"--dim must be >= 1, got {self.d}")
        if self.N < 0:
            raise InvalidParameterError(f"--box-n must be >= 0, got {self.N}")
        if self.replicas is not None and self.replicas < 0:
            raise InvalidParameterError(f"--replicas must be >= 0, got {self.replicas}")
        if self.workers < 1:
            raise InvalidParameterError(f"--workers must be >= 1, got {self.workers}")
        if self.window is not None and not 0 <= self.window <= self.N:
            raise InvalidParameterError(f"--window must lie in [0, {self.N}], got {self.window}")
        if self.format not in FORMATS:
            raise InvalidParameterError(f"--format must be one of {FORMATS}")
        if self.checkpoint is not None and self.checkpoint < 1:
            raise InvalidParameterError(f"--checkpoint must be >= 1, got {self.checkpoint}")
        if self.T is not None and self.T < 0:
            raise InvalidParameterError(f"--time must be >= 0, got {self.T}")
        if self.steps is not None and self.steps < 0:
            raise InvalidParameterError(f"--steps must be >= 0, got {self.steps}")
        if self.mode is not None:
            if self.mode not in {m.value for m in SamplerMode}:
                raise InvalidParameterError(f"unknown sampler mode {self.mode!r}")
            if self.value is None:
                raise InvalidParameterError(f"{self.mode} sampler needs a parameter value")
        if self.command == "sample":
            if self.mode is None:
                raise InvalidParameterError("sample needs one of --p, --mean-time, --cesaro-t")
            if self.out is None:
                raise InvalidParameterError("sample needs --out")
            self.sampler_params()
        if self.command == "simulate":
            if (self.steps is None) == (self.T is None):
                raise InvalidParameterError("simulate needs exactly one of --steps and --time")
            if self.out is None:
                raise InvalidParameterError("simulate needs --out")
            if self.resume and self.checkpoint is None:
                raise InvalidParameterError("--resume needs --checkpoint")
        if self.command == "test" and self.suite not in SUITES:
            raise InvalidParameterError(f"test suite must be one of {SUITES}")
        if self.command == "stats" and self.kind not in STAT_KINDS:
            raise InvalidParameterError(f"stats kind must be one of {STAT_KINDS}")
        if self.command == "plot" and (self.input is None or self.out is None):
            raise InvalidParameterError("plot needs --input and --out")
        return self

    @property
    def replica_count(self) -> int:
        return 1 if self.replicas is None else self.replicas

    def sampler_params(self, **overrides: Any) -> SamplerParams:
        if self.mode is None or self.value is None:
            raise InvalidParameterError("no sampler selected")
        data = {
            "d": self.d,
            "N": self.N,
            "mode": self.mode,
            "value": self.value,
            "seed": self.seed,
            "replicas": self.replica_count,
            "window": self.window,
            **overrides,
        }
        return SamplerParams.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        return cls(**dict(data))

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        mode, value = None, None
        for name, m in (
            ("p", SamplerMode.GEOMETRIC),
            ("mean_time", SamplerMode.EXPONENTIAL),
            ("cesaro_t", SamplerMode.CESARO),
        ):
            if getattr(args, name, None) is not None:
                mode, value = m.value, getattr(args, name)
        return cls(
            command=args.command,
            d=args.dim,
            N=args.box_n,
            mode=mode,
            value=value,
            T=args.time,
            steps=args.steps,
            replicas=args.replicas,
            seed=args.seed,
            window=args.window,
            out=args.out,
            format=args.format,
            checkpoint=args.checkpoint,
            force=args.force,
            resume=args.resume,
            workers=args.workers,
            suite=getattr(args, "suite", None),
            kind=getattr(args, "kind", None),
            input=args.input,
            replica=args.replica,
            quick=args.quick,
        )
