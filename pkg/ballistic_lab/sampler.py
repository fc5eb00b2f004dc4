"""
Samplers for approximately stationary centered surfaces.

Three families, all started from the zero field on ``B_N`` under the pinned-zero boundary:

- geometric: ``n ~ Geometric(p)`` on ``{0, 1, ...}``, then ``n`` discrete uniform-site steps.
  Valid window ``N^-(d+1) <= p <= N^-d``.
- exponential: elapsed time ``t ~ Exponential(mean a)``, then the continuous-time dynamics.
  The number of updates is geometric with success probability ``1 / (|B_N| a + 1)``, so this
  family is the geometric one reparameterised (``matched_geometric_p``).
- cesaro: elapsed time uniform on ``[0, t]``.

Each output is re-centered (origin value 0) and cut to the window ``B_W``.
"""

import logging
from dataclasses import asdict, dataclass, replace
from enum import Enum
from functools import partial
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .dynamics import ChainConfig, run_continuous, run_discrete
from .errors import InvalidParameterError, WindowError
from .lattice import BoxSpec, CenteredSample, Site, recenter
from .replicas import map_replicas, mix_seed

__all__ = [
    "SamplerMode",
    "SamplerParams",
    "Verdict",
    "ParamCheck",
    "CenteredSample",
    "validate_params",
    "recommended_p",
    "draw_update_count",
    "sample_stationary",
    "sample_exponential",
    "sample_cesaro",
    "couple_exponential",
    "sample_one",
    "evolve_further",
    "matched_geometric_p",
    "matched_mean_time",
    "draw_samples",
]

logger = logging.getLogger(__name__)


class SamplerMode(str, Enum):
    GEOMETRIC = "geometric"
    EXPONENTIAL = "exponential"
    CESARO = "cesaro"


@dataclass(frozen=True)
class SamplerParams:
    """``value`` is ``p`` (geometric), the mean time ``a`` (exponential) or the horizon ``t``
    (cesaro). ``window`` defaults to the full box."""

    d: int
    N: int
    mode: SamplerMode
    value: float
    seed: int = 0
    replicas: int = 1
    window: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "mode", SamplerMode(self.mode))
        if self.window is None:
            object.__setattr__(self, "window", self.N)
        if self.d < 1 or self.N < 0:
            raise InvalidParameterError(f"need d >= 1 and N >= 0, got d={self.d}, N={self.N}")
        if self.replicas < 0:
            raise InvalidParameterError(f"replicas must be >= 0, got {self.replicas}")
        if not 0 <= self.window <= self.N:
            raise InvalidParameterError(f"window {self.window} must lie in [0, {self.N}]")
        if self.mode == SamplerMode.GEOMETRIC and not 0 < self.value < 1:
            raise InvalidParameterError(f"p must lie in (0, 1), got {self.value}")
        if self.mode == SamplerMode.EXPONENTIAL and not self.value > 0:
            raise InvalidParameterError(f"mean time a must be > 0, got {self.value}")
        if self.mode == SamplerMode.CESARO and not self.value >= 0:
            raise InvalidParameterError(f"cesaro horizon t must be >= 0, got {self.value}")

    @property
    def box(self) -> BoxSpec:
        return BoxSpec(self.d, self.N)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["mode"] = self.mode.value
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SamplerParams":
        return cls(
            d=int(data["d"]),
            N=int(data["N"]),
            mode=SamplerMode(data["mode"]),
            value=float(data["value"]),
            seed=int(data.get("seed", 0)),
            replicas=int(data.get("replicas", 1)),
            window=None if data.get("window") is None else int(data["window"]),
        )


class Verdict(str, Enum):
    VALID = "valid"
    OUT_OF_WINDOW = "out-of-window"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class ParamCheck:
    verdict: Verdict
    low: float
    high: float
    recommended_p: float
    message: str

    @property
    def ok(self) -> bool:
        return self.verdict == Verdict.VALID


def recommended_p(d: int, N: int) -> float:
    """Log-midpoint ``N^-(d + 1/2)`` of the geometric window."""
    return float(N) ** -(d + 0.5) if N > 0 else 1.0


def validate_params(params: SamplerParams) -> ParamCheck:
    d, N, v = params.d, params.N, params.value
    p_star = recommended_p(d, N)
    if params.mode == SamplerMode.GEOMETRIC:
        low, high = (float(N) ** -(d + 1), float(N) ** -d) if N > 0 else (1.0, 1.0)
        name = "p"
    else:
        low, high = 1.0, float(N)
        name = "a" if params.mode == SamplerMode.EXPONENTIAL else "t"
    if N < 2:
        return ParamCheck(
            Verdict.DEGENERATE, low, high, p_star, f"B_{N} is too small for a nontrivial window"
        )
    if params.window == 0:
        return ParamCheck(Verdict.DEGENERATE, low, high, p_star, "window B_0 has no gradients")
    if params.mode == SamplerMode.CESARO and v == 0:
        msg = "t = 0 always gives the zero field"
        return ParamCheck(Verdict.DEGENERATE, low, high, p_star, msg)
    if low <= v <= high:
        msg = f"{name}={v:g} in [{low:g}, {high:g}]"
        return ParamCheck(Verdict.VALID, low, high, p_star, msg)
    return ParamCheck(
        Verdict.OUT_OF_WINDOW, low, high, p_star, f"{name}={v:g} outside [{low:g}, {high:g}]"
    )


def draw_update_count(p: float, rng: np.random.Generator) -> int:
    """``Pr(n = j) = p (1 - p)^j`` for ``j >= 0``."""
    return int(rng.geometric(p)) - 1


def _finish(sample: CenteredSample, params: SamplerParams, **meta: Any) -> CenteredSample:
    sample = replace(sample, seed=params.seed, params=params.to_dict(), **meta)
    return sample.with_window(params.window)


def _require(params: SamplerParams, mode: SamplerMode) -> None:
    if params.mode != mode:
        raise InvalidParameterError(f"expected {mode.value} parameters, got {params.mode.value}")


def sample_stationary(
    params: SamplerParams,
    rng: Optional[np.random.Generator] = None,
    sites: Optional[Sequence[Union[int, Site]]] = None,
) -> CenteredSample:
    """Geometric sampler. With a forced ``sites`` stream the count is ``len(sites)`` and no
    randomness is used (this is the coupling with the exponential sampler)."""
    _require(params, SamplerMode.GEOMETRIC)
    cfg = ChainConfig(params.box, seed=params.seed)
    rng = rng if rng is not None else cfg.rng()
    n = len(sites) if sites is not None else draw_update_count(params.value, rng)
    res = run_discrete(cfg, n, rng=rng, sites=sites)
    return _finish(recenter(res.final), params, n_updates=n)


def _exponential(params: SamplerParams, rng: Optional[np.random.Generator]):
    _require(params, SamplerMode.EXPONENTIAL)
    cfg = ChainConfig(params.box, seed=params.seed)
    rng = rng if rng is not None else cfg.rng()
    t = float(rng.exponential(params.value))
    res = run_continuous(cfg, t, rng=rng)
    sample = _finish(recenter(res.final), params, n_updates=res.events, elapsed_time=t)
    return sample, res.schedule


def sample_exponential(
    params: SamplerParams, rng: Optional[np.random.Generator] = None
) -> CenteredSample:
    return _exponential(params, rng)[0]


def couple_exponential(
    params: SamplerParams, rng: Optional[np.random.Generator] = None
) -> Tuple[CenteredSample, CenteredSample]:
    """An exponential sample and the geometric sample at ``matched_geometric_p`` driven by the
    same site stream. The two update counts have the same law, so the pair is a coupling of
    the two samplers; the surfaces must agree exactly."""
    sample, schedule = _exponential(params, rng)
    p = matched_geometric_p(params.box.size, params.value)
    geo = replace(params, mode=SamplerMode.GEOMETRIC, value=p)
    return sample, sample_stationary(geo, sites=schedule.sites)


def sample_cesaro(
    params: SamplerParams, rng: Optional[np.random.Generator] = None
) -> CenteredSample:
    _require(params, SamplerMode.CESARO)
    cfg = ChainConfig(params.box, seed=params.seed)
    rng = rng if rng is not None else cfg.rng()
    s = float(rng.random()) * params.value
    res = run_continuous(cfg, s, rng=rng)
    return _finish(recenter(res.final), params, n_updates=res.events, elapsed_time=s)


_SAMPLERS = {
    SamplerMode.GEOMETRIC: sample_stationary,
    SamplerMode.EXPONENTIAL: sample_exponential,
    SamplerMode.CESARO: sample_cesaro,
}


def sample_one(
    params: SamplerParams, rng: Optional[np.random.Generator] = None
) -> CenteredSample:
    return _SAMPLERS[params.mode](params, rng)


def evolve_further(
    sample: CenteredSample, T: float, rng: Optional[np.random.Generator] = None
) -> CenteredSample:
    """Run the continuous dynamics for another ``T`` from the sample's raw heights, re-center.

    Only full-box samples carry the heights the dynamics needs.
    """
    if T < 0:
        raise InvalidParameterError(f"T must be >= 0, got {T}")
    if sample.window != sample.box.N:
        raise WindowError(
            f"window B_{sample.window} is smaller than B_{sample.box.N}; evolve full-box samples"
        )
    if T == 0:
        return sample
    cfg = ChainConfig(sample.box, seed=sample.seed or 0)
    rng = rng if rng is not None else cfg.rng()
    res = run_continuous(cfg, T, rng=rng, initial=sample.to_field())
    out = recenter(res.final)
    return replace(
        out,
        n_updates=(sample.n_updates or 0) + res.events,
        elapsed_time=None if sample.elapsed_time is None else sample.elapsed_time + T,
        seed=sample.seed,
        params=sample.params,
    )


def matched_geometric_p(B: int, a: float) -> float:
    """Geometric ``p`` whose update-count law equals that of the exponential sampler at ``a``."""
    return 1.0 / (B * a + 1.0)


def matched_mean_time(B: int, p: float) -> float:
    return (1.0 / p - 1.0) / B


def _replica(params: SamplerParams, index: int, rng: np.random.Generator) -> CenteredSample:
    sample = sample_one(params, rng)
    return replace(sample, seed=mix_seed(params.seed, index))


def draw_samples(params: SamplerParams, workers: int = 1) -> List[CenteredSample]:
    """``params.replicas`` independent samples; replica ``i`` uses ``mix_seed(seed, i)``."""
    check = validate_params(params)
    if not check.ok:
        logger.warning("sampler parameters are %s: %s", check.verdict.value, check.message)
    return map_replicas(partial(_replica, params), params.seed, params.replicas, workers)
