"""
Ballistic deposition dynamics on a finite box.

Random draws
------------
Every draw goes through ``Generator.random``, which consumes exactly one 64-bit output per
value, so the stream does not depend on how draws are chunked:

* discrete chain: one uniform ``u`` per step, site ``floor(u * |B_N|)`` in canonical order;
* continuous time (superposition of the site clocks): two uniforms per event, first the gap
  ``-log1p(-u) / |B_N|``, then the site. A zero gap would collide with the previous event
  time, so that pair is discarded. Event times are running sums in draw order.

The two parameterisations see the same deposit sequence whenever they are fed the same site
stream, which is what the coupling tests rely on.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatchError, HeightOverflowError, OutsideBoxError, SchemaError
from .lattice import Boundary, BoxSpec, HeightField, Site

__all__ = [
    "UpdateSchedule",
    "ChainConfig",
    "Snapshot",
    "SimResult",
    "Chain",
    "deposit",
    "run_discrete",
    "generate_schedule",
    "apply_schedule",
    "run_continuous",
]

logger = logging.getLogger(__name__)

_MAX_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class UpdateSchedule:
    """Event times on ``[0, horizon]`` for every box site, kept as one time-sorted list.

    ``times`` is strictly increasing (so all event times are distinct) and ``sites[k]`` is the
    canonical index of the site whose clock rings at ``times[k]``.
    """

    box: BoxSpec
    horizon: float
    times: np.ndarray
    sites: np.ndarray

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        if self.times.shape != self.sites.shape or self.times.ndim != 1:
            raise DimensionMismatchError("times and sites must be 1d arrays of equal length")
        if len(self.times):
            if np.any(np.diff(self.times) <= 0):
                raise ValueError("event times must be distinct and sorted")
            if self.times[0] < 0 or self.times[-1] > self.horizon:
                raise ValueError(f"event times must lie in [0, {self.horizon}]")
            if self.sites.min() < 0 or self.sites.max() >= self.box.size:
                raise OutsideBoxError("schedule refers to a site outside the box")
        self.times.setflags(write=False)
        self.sites.setflags(write=False)

    @classmethod
    def empty(cls, box: BoxSpec, horizon: float = 0.0) -> "UpdateSchedule":
        return cls(box, horizon, np.zeros(0), np.zeros(0, dtype=np.int64))

    @classmethod
    def from_site_times(
        cls, box: BoxSpec, horizon: float, site_times: Mapping[Site, Iterable[float]]
    ) -> "UpdateSchedule":
        times: List[float] = []
        sites: List[int] = []
        for x, ts in site_times.items():
            k = box.index(x)
            for t in ts:
                times.append(float(t))
                sites.append(k)
        order = np.argsort(times, kind="stable")
        return cls(
            box,
            float(horizon),
            np.asarray(times, dtype=np.float64)[order],
            np.asarray(sites, dtype=np.int64)[order],
        )

    @property
    def count(self) -> int:
        return len(self.times)

    def per_site(self) -> Dict[Site, List[float]]:
        return {self.box.site(k): list(ts) for k, ts in self._by_site.items()}

    @cached_property
    def _by_site(self) -> Dict[int, List[float]]:
        out: Dict[int, List[float]] = {}
        for t, k in zip(self.times.tolist(), self.sites.tolist()):
            out.setdefault(k, []).append(t)
        return out

    def times_at(self, x: Sequence[int]) -> List[float]:
        """Ascending event times at ``x``; empty for sites outside the box."""
        if not self.box.contains(x):
            return []
        return self._by_site.get(self.box.index(x), [])

    def site_counts(self) -> np.ndarray:
        return np.bincount(self.sites, minlength=self.box.size)

    def restrict(self, horizon: float) -> "UpdateSchedule":
        """The same events, cut to ``[0, horizon]``."""
        keep = self.times <= horizon
        return UpdateSchedule(self.box, horizon, self.times[keep].copy(), self.sites[keep].copy())


@dataclass(frozen=True)
class ChainConfig:
    box: BoxSpec
    boundary: Boundary = Boundary.PINNED_ZERO
    seed: int = 0

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed))


@dataclass(frozen=True)
class Snapshot:
    events: int
    time: Optional[float]
    field: HeightField


@dataclass(frozen=True)
class SimResult:
    final: HeightField
    events: int
    elapsed: Optional[float] = None
    schedule: Optional[UpdateSchedule] = None
    snapshots: List[Snapshot] = field(default_factory=list)


def _deposit_all(buf: List[int], flat_sites: Iterable[int], offsets: Sequence[int]) -> None:
    """Apply the update rule in place on a padded flat buffer."""
    if len(offsets) == 2:
        a, b = offsets
        for i in flat_sites:
            m = buf[i] + 1
            v = buf[i + a]
            if v > m:
                m = v
            v = buf[i + b]
            if v > m:
                m = v
            buf[i] = m
        return
    for i in flat_sites:
        m = buf[i] + 1
        for o in offsets:
            v = buf[i + o]
            if v > m:
                m = v
        buf[i] = m


def _to_field(box: BoxSpec, buf: List[int], boundary: Boundary) -> HeightField:
    try:
        padded = np.array(buf, dtype=np.int64).reshape(box.padded_shape)
    except OverflowError as exc:
        raise HeightOverflowError("a height left the signed 64-bit range") from exc
    return HeightField(box, padded, boundary)


def deposit(h: HeightField, x: Sequence[int]) -> HeightField:
    """One deposit at ``x``: ``max(max of the 2d neighbour heights, h(x) + 1)``."""
    box = h.box
    box.check_site(x)
    buf = h.padded.ravel().tolist()
    _deposit_all(buf, [box.padded_index(x)], box.neighbor_offsets)
    return _to_field(box, buf, h.boundary)


def _sites_from_uniforms(u: np.ndarray, n_sites: int) -> np.ndarray:
    return np.minimum((u * n_sites).astype(np.int64), n_sites - 1)


def _site_indices(box: BoxSpec, sites: Iterable[Union[int, Site]]) -> np.ndarray:
    out = []
    for s in sites:
        if isinstance(s, (tuple, list)):
            out.append(box.index(s))
        else:
            k = int(s)
            if not 0 <= k < box.size:
                raise OutsideBoxError(f"site index {k} is outside B_{box.N}")
            out.append(k)
    return np.asarray(out, dtype=np.int64)


class Chain:
    """A single chain owned by one caller: the padded heights plus event and time counters.

    This is the resumable form of the dynamics; ``state_dict`` captures heights, counters and
    the bit-generator state, and ``from_state`` continues exactly where the saved chain stopped.
    """

    def __init__(
        self,
        cfg: ChainConfig,
        initial: Optional[HeightField] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        if initial is None:
            initial = HeightField.zeros(cfg.box, cfg.boundary)
        elif initial.box != cfg.box:
            raise DimensionMismatchError(f"initial field lives on {initial.box}, not {cfg.box}")
        self.cfg = cfg
        self.box = cfg.box
        self.boundary = initial.boundary
        self._rng = rng
        self.events = 0
        self.time = 0.0
        self._buf: List[int] = initial.padded.ravel().tolist()
        self._flat = self.box.interior_flat

    @property
    def rng(self) -> np.random.Generator:
        if self._rng is None:
            self._rng = self.cfg.rng()
        return self._rng

    @property
    def field(self) -> HeightField:
        return _to_field(self.box, self._buf, self.boundary)

    def apply_sites(self, site_idx: np.ndarray) -> None:
        _deposit_all(self._buf, self._flat[site_idx].tolist(), self.box.neighbor_offsets)
        self.events += len(site_idx)

    def draw_sites(self, count: int) -> np.ndarray:
        return _sites_from_uniforms(self.rng.random(count), self.box.size)

    def advance_steps(self, count: int) -> None:
        """``count`` discrete steps at uniform sites."""
        done = 0
        while done < count:
            m = min(_MAX_CHUNK, count - done)
            self.apply_sites(self.draw_sites(m))
            done += m

    def state_dict(self) -> Dict[str, Any]:
        return {
            "d": self.box.d,
            "N": self.box.N,
            "boundary": self.boundary.value,
            "seed": self.cfg.seed,
            "events": self.events,
            "time": self.time,
            "padded": self._buf.copy(),
            "rng_state": self.rng.bit_generator.state,
        }

    @classmethod
    def from_state(cls, cfg: ChainConfig, state: Mapping[str, Any]) -> "Chain":
        if (state.get("d"), state.get("N")) != (cfg.box.d, cfg.box.N):
            raise SchemaError(
                f"checkpoint is for d={state.get('d')}, N={state.get('N')}, "
                f"not d={cfg.box.d}, N={cfg.box.N}"
            )
        padded = np.asarray(state["padded"], dtype=np.int64).reshape(cfg.box.padded_shape)
        initial = HeightField(cfg.box, padded, Boundary(state["boundary"]))
        rng = np.random.Generator(np.random.PCG64())
        rng.bit_generator.state = state["rng_state"]
        chain = cls(cfg, initial, rng)
        chain.events = int(state["events"])
        chain.time = float(state["time"])
        return chain


def run_discrete(
    cfg: ChainConfig,
    steps: int,
    rng: Optional[np.random.Generator] = None,
    initial: Optional[HeightField] = None,
    sites: Optional[Iterable[Union[int, Site]]] = None,
    snapshot_every: Optional[int] = None,
) -> SimResult:
    """Deposit at ``steps`` uniform box sites.

    Parameters
    ----------
    sites : optional
        A forced site stream (canonical indices or site tuples); when given, ``steps`` must
        match its length and no randomness is used.
    snapshot_every : int, optional
        Record the field after every ``snapshot_every`` steps.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    chain = Chain(cfg, initial, rng)
    forced = None
    if sites is not None:
        forced = _site_indices(cfg.box, sites)
        if len(forced) != steps:
            raise ValueError(f"forced stream has {len(forced)} sites, expected {steps}")
    stride = snapshot_every if snapshot_every and snapshot_every > 0 else None
    snapshots: List[Snapshot] = []
    while chain.events < steps:
        m = steps - chain.events
        if stride is not None:
            m = min(m, stride - chain.events % stride)
        if forced is not None:
            chain.apply_sites(forced[chain.events : chain.events + m])
        else:
            chain.advance_steps(m)
        if stride is not None and chain.events % stride == 0:
            snapshots.append(Snapshot(chain.events, None, chain.field))
    logger.debug("discrete run on B_%d: %d steps", cfg.box.N, steps)
    return SimResult(chain.field, chain.events, None, None, snapshots)


def _draw_events(rng: np.random.Generator, n_sites: int, horizon: float):
    """Superposed event stream up to ``horizon``: (times, canonical site indices).

    A draw whose time does not exceed the previous event's (a zero uniform, or a gap that
    underflows against a large clock) is discarded and the next draw takes its place, so the
    returned times are strictly increasing.
    """
    times: List[np.ndarray] = []
    picks: List[np.ndarray] = []
    if horizon <= 0:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    rate = float(n_sites)
    chunk = int(min(_MAX_CHUNK, max(32, 1.05 * rate * horizon + 32)))
    t = 0.0
    while True:
        u = rng.random((chunk, 2))
        gaps = -np.log1p(-u[:, 0]) / rate
        # running sum seeded with t, so chunk boundaries do not change any time
        stamps = np.cumsum(np.concatenate(([t], gaps)))[1:]
        keep = stamps > np.concatenate(([t], stamps[:-1]))
        stamps = stamps[keep]
        sites = _sites_from_uniforms(u[keep, 1], n_sites)
        inside = stamps <= horizon
        if not inside.all():
            cut = int(np.argmin(inside))
            times.append(stamps[:cut])
            picks.append(sites[:cut])
            break
        times.append(stamps)
        picks.append(sites)
        if len(stamps):
            t = float(stamps[-1])
    return np.concatenate(times), np.concatenate(picks).astype(np.int64)


def generate_schedule(
    cfg: ChainConfig, T: float, rng: Optional[np.random.Generator] = None
) -> UpdateSchedule:
    """Rate-1 Poisson clocks at every box site on ``[0, T]``, realised by superposition."""
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    rng = rng if rng is not None else cfg.rng()
    times, sites = _draw_events(rng, cfg.box.size, T)
    return UpdateSchedule(cfg.box, float(T), times, sites)


def _restricted_sites(P: UpdateSchedule, D: Optional[Iterable[Sequence[int]]]) -> np.ndarray:
    if D is None:
        return P.sites
    indices = {P.box.index(x) for x in D}
    mask = np.isin(P.sites, np.fromiter(indices, dtype=np.int64, count=len(indices)))
    return P.sites[mask]


def apply_schedule(
    f: HeightField,
    P: UpdateSchedule,
    D: Optional[Iterable[Sequence[int]]] = None,
) -> HeightField:
    """Ψ_D(f, P): the events of ``P`` at sites of ``D`` applied in time order.

    Sites outside ``D`` (and the collar) keep their values from ``f`` but still take part in
    neighbour maxima. ``D`` defaults to the whole box.
    """
    if P.box != f.box:
        raise DimensionMismatchError(f"schedule lives on {P.box}, field on {f.box}")
    sites = _restricted_sites(P, D)
    buf = f.padded.ravel().tolist()
    _deposit_all(buf, f.box.interior_flat[sites].tolist(), f.box.neighbor_offsets)
    return _to_field(f.box, buf, f.boundary)


def run_continuous(
    cfg: ChainConfig,
    T: float,
    rng: Optional[np.random.Generator] = None,
    initial: Optional[HeightField] = None,
    snapshot_every: Optional[int] = None,
    snapshot_times: Optional[Sequence[float]] = None,
) -> SimResult:
    """Continuous-time dynamics to time ``T``; the schedule is kept on the result."""
    schedule = generate_schedule(cfg, T, rng)
    chain = Chain(cfg, initial)
    cuts = set()
    if snapshot_every and snapshot_every > 0:
        cuts.update(range(snapshot_every, schedule.count + 1, snapshot_every))
    marks: Dict[int, List[float]] = {}
    for s in sorted(snapshot_times or ()):
        k = int(np.searchsorted(schedule.times, s, side="right"))
        cuts.add(k)
        marks.setdefault(k, []).append(float(s))
    snapshots: List[Snapshot] = []
    start = 0
    for k in sorted(cuts | {schedule.count}):
        if k > start:
            chain.apply_sites(schedule.sites[start:k])
            start = k
        if k in marks:
            snapshots.extend(Snapshot(k, s, chain.field) for s in marks[k])
        elif k in cuts:
            snapshots.append(Snapshot(k, float(schedule.times[k - 1]), chain.field))
    logger.debug("continuous run on B_%d to T=%g: %d events", cfg.box.N, T, schedule.count)
    return SimResult(chain.field, schedule.count, float(T), schedule, snapshots)
