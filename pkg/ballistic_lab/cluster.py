"""
Backward influence clusters of the graphical construction.

Exploration:
  Start from the root ``x`` at time ``T`` with ``S = {x}``. Repeatedly take the latest event
  strictly before the current time at any site of ``S``, move the clock back to it and add the
  neighbours of that site to ``S``. Stop when ``S`` has no earlier event.

  Each member of ``S`` keeps a backward cursor into its own sorted event list, and the cursors
  sit in a max-heap keyed on their event time, so one exploration costs
  ``O(K log |S|)`` on top of reading the per-site lists.

Locality:
  When ``S(x, P)`` stays inside the box, the height at ``x`` after running ``P`` restricted to
  any ``D`` with ``S ⊆ D ⊆ box`` is the same; ``stabilization_check`` tests exactly that.

Sources:
  ``explore`` accepts anything with ``horizon`` and ``times_at(site)``: a full
  ``UpdateSchedule``, or a ``LazySchedule`` that draws each site's clock the first time it is
  looked at (same law, but only explored sites cost anything).
"""

import bisect
import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy import stats

from .config import DEFAULT_TOLERANCES
from .dynamics import ChainConfig, UpdateSchedule, apply_schedule, generate_schedule
from .errors import InvalidParameterError
from .lattice import BoxSpec, HeightField, Site, l1_norm, neighbors, origin

__all__ = [
    "EventSource",
    "LazySchedule",
    "ClusterResult",
    "StabilizationReport",
    "TailRow",
    "TailEstimate",
    "BoxAgreement",
    "explore",
    "stabilization_check",
    "radius_tail",
    "box_agreement",
]

logger = logging.getLogger(__name__)


class EventSource(Protocol):
    box: BoxSpec
    horizon: float

    def times_at(self, x: Sequence[int]) -> List[float]: ...


class LazySchedule:
    """Independent rate-1 Poisson clocks on ``[0, horizon]``, drawn per site on first use.

    Sites outside ``box`` never ring.
    """

    def __init__(self, box: BoxSpec, horizon: float, rng: np.random.Generator):
        if horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {horizon}")
        self.box = box
        self.horizon = float(horizon)
        self._rng = rng
        self._cache: Dict[Site, List[float]] = {}

    def times_at(self, x: Sequence[int]) -> List[float]:
        key = tuple(x)
        ts = self._cache.get(key)
        if ts is None:
            if self.box.contains(key) and self.horizon > 0:
                n = int(self._rng.poisson(self.horizon))
                ts = sorted((self._rng.random(n) * self.horizon).tolist())
            else:
                ts = []
            self._cache[key] = ts
        return ts


@dataclass(frozen=True)
class ClusterResult:
    root: Site
    sites: FrozenSet[Site]
    K: int
    times: Tuple[float, ...]
    rho: int
    escaped: bool = False

    @property
    def size(self) -> int:
        return len(self.sites)


def explore(x: Sequence[int], P: EventSource) -> ClusterResult:
    """Influence set ``S(x, P)``, its step count ``K``, the times ``t_1 > ... > t_K`` and the
    radius ``rho``. ``escaped`` is set when ``S`` reaches a site outside the box."""
    root = P.box.check_site(x)
    S = {root}
    heap: List[Tuple[float, Site, int]] = []

    def push(y: Site, before: float) -> None:
        ts = P.times_at(y)
        j = bisect.bisect_left(ts, before) - 1
        if j >= 0:
            heapq.heappush(heap, (-ts[j], y, j))

    push(root, P.horizon)
    times: List[float] = []
    while heap:
        neg_t, y, j = heapq.heappop(heap)
        t = -neg_t
        times.append(t)
        for z in neighbors(y):
            if z not in S:
                S.add(z)
                push(z, t)
        if j > 0:
            heapq.heappush(heap, (-P.times_at(y)[j - 1], y, j - 1))
    rho = max(l1_norm(tuple(a - b for a, b in zip(y, root))) for y in S)
    escaped = any(not P.box.contains(y) for y in S)
    return ClusterResult(root, frozenset(S), len(times), tuple(times), rho, escaped)


@dataclass(frozen=True)
class StabilizationReport:
    root: Site
    value: Optional[int]
    stable: bool
    escaped: bool
    cluster: ClusterResult
    values: Dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.stable and not self.escaped


def _grow(box: BoxSpec, sites: Iterable[Site], layers: int) -> FrozenSet[Site]:
    out = set(sites)
    frontier = set(out)
    for _ in range(layers):
        nxt = set()
        for y in frontier:
            for z in neighbors(y):
                if z not in out and box.contains(z):
                    nxt.add(z)
        out |= nxt
        frontier = nxt
    return frozenset(out)


def stabilization_check(
    f: HeightField,
    P: UpdateSchedule,
    x: Sequence[int],
    supersets: Optional[Iterable[Iterable[Sequence[int]]]] = None,
    layers: int = 2,
) -> StabilizationReport:
    """Compare the height at ``x`` after ``P`` restricted to ``S(x, P)`` and to larger domains.

    The domains tried are ``S`` itself, ``S`` grown by 1..``layers`` neighbour layers (clipped to
    the box), the whole box, and any extra ``supersets`` (each must contain ``S``). A cluster that
    leaves the box is reported with ``escaped=True`` and no value.
    """
    cluster = explore(x, P)
    if cluster.escaped:
        logger.warning("cluster of %s escapes B_%d; locality cannot be checked", x, P.box.N)
        return StabilizationReport(cluster.root, None, False, True, cluster)
    box = f.box
    domains: List[Tuple[str, FrozenSet[Site]]] = [("S", cluster.sites)]
    for r in range(1, layers + 1):
        domains.append((f"S+{r}", _grow(box, cluster.sites, r)))
    domains.append(("box", frozenset()))
    for i, D in enumerate(supersets or ()):
        D = frozenset(box.check_site(y) for y in D)
        if not cluster.sites <= D:
            raise InvalidParameterError(f"superset {i} does not contain S({tuple(x)}, P)")
        domains.append((f"extra{i}", D))
    values: Dict[str, int] = {}
    for label, D in domains:
        out = apply_schedule(f, P, None if label == "box" else D)
        values[label] = out.value(cluster.root)
    distinct = set(values.values())
    value = values["S"]
    return StabilizationReport(cluster.root, value, len(distinct) == 1, False, cluster, values)


@dataclass(frozen=True)
class TailRow:
    T: float
    probability: float
    stderr: float
    replicas: int
    censored: int
    at_least_one: float
    mean_rho: float


@dataclass(frozen=True)
class TailEstimate:
    c: float
    rows: List[TailRow]
    slope: float
    intercept: float
    r_squared: float

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {
                "T": r.T,
                "tail_probability": r.probability,
                "stderr": r.stderr,
                "censored": r.censored,
                "replicas": r.replicas,
                "p_rho_ge_1": r.at_least_one,
                "mean_rho": r.mean_rho,
            }
            for r in self.rows
        ]


def radius_tail(
    d: int,
    N: int,
    T_grid: Sequence[float],
    replicas: int,
    c: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
) -> TailEstimate:
    """Monte Carlo estimate of ``Pr(rho(0, P) > c T)`` for each ``T`` in the grid.

    Clusters that leave ``B_N`` are right-censored at ``rho >= N + 1``; they count towards the
    tail (they exceed ``c T`` whenever ``c T <= N``, and are an upper bound otherwise). The fit is
    a least-squares line through ``(T, log probability)`` over the nonzero estimates.
    """
    if replicas < 1:
        raise InvalidParameterError(f"replicas must be >= 1, got {replicas}")
    c = DEFAULT_TOLERANCES.cluster_tail_c if c is None else float(c)
    if c <= 0:
        raise InvalidParameterError(f"c must be > 0, got {c}")
    rng = rng if rng is not None else np.random.default_rng()
    box = BoxSpec(d, N)
    root = origin(d)
    rows: List[TailRow] = []
    for T in T_grid:
        exceed = censored = nonzero = 0
        rho_sum = 0
        for _ in range(replicas):
            res = explore(root, LazySchedule(box, T, rng))
            rho_sum += res.rho
            if res.rho >= 1:
                nonzero += 1
            if res.escaped:
                censored += 1
                exceed += 1
            elif res.rho > c * T:
                exceed += 1
        if censored:
            level = logging.WARNING if c * T > N else logging.INFO
            logger.log(level, "T=%g: %d of %d clusters left B_%d", T, censored, replicas, N)
        p = exceed / replicas
        rows.append(
            TailRow(
                T=float(T),
                probability=p,
                stderr=math.sqrt(p * (1 - p) / replicas),
                replicas=replicas,
                censored=censored,
                at_least_one=nonzero / replicas,
                mean_rho=rho_sum / replicas,
            )
        )
    slope, intercept, r_squared = _log_fit(rows)
    return TailEstimate(c, rows, slope, intercept, r_squared)


def _log_fit(rows: Sequence[TailRow]) -> Tuple[float, float, float]:
    pts = [(r.T, math.log(r.probability)) for r in rows if r.probability > 0]
    if len(pts) < 2 or len({t for t, _ in pts}) < 2:
        return math.nan, math.nan, math.nan
    fit = stats.linregress([t for t, _ in pts], [y for _, y in pts])
    return float(fit.slope), float(fit.intercept), float(fit.rvalue**2)


@dataclass(frozen=True)
class BoxAgreement:
    d: int
    N: int
    M: int
    T: float
    replicas: int
    disagreements: int
    contained: int
    # disagreements among replicas whose cluster stayed inside B_N; always 0
    contained_disagreements: int = 0

    @property
    def disagreement_rate(self) -> float:
        return self.disagreements / self.replicas if self.replicas else 0.0

    @property
    def containment_rate(self) -> float:
        return self.contained / self.replicas if self.replicas else 1.0


def _restrict_to_box(P: UpdateSchedule, box: BoxSpec) -> UpdateSchedule:
    """The events of ``P`` at sites of the smaller centred ``box``, reindexed."""
    shift = P.box.N - box.N
    coords = np.stack(np.unravel_index(P.sites, P.box.shape), axis=0) - shift
    keep = np.all((coords >= 0) & (coords < box.side), axis=0)
    sites = np.ravel_multi_index(tuple(coords[:, keep]), box.shape).astype(np.int64)
    return UpdateSchedule(box, P.horizon, P.times[keep].copy(), sites)


def box_agreement(
    d: int,
    N: int,
    M: int,
    T: float,
    replicas: int,
    rng: Optional[np.random.Generator] = None,
) -> BoxAgreement:
    """Run one event stream on ``B_M`` and its restriction on ``B_N`` (both pinned at zero) and
    count how often the origin heights differ. A replica whose cluster stays inside ``B_N`` can
    never disagree."""
    if M < N:
        raise InvalidParameterError(f"outer box B_{M} must contain B_{N}")
    rng = rng if rng is not None else np.random.default_rng()
    big, small = BoxSpec(d, M), BoxSpec(d, N)
    cfg = ChainConfig(big)
    zero_big, zero_small = HeightField.zeros(big), HeightField.zeros(small)
    root = origin(d)
    disagreements = contained = contained_disagreements = 0
    for _ in range(replicas):
        P = generate_schedule(cfg, T, rng)
        cluster = explore(root, P)
        inside = all(small.contains(y) for y in cluster.sites)
        contained += inside
        h_big = apply_schedule(zero_big, P).value(root)
        h_small = apply_schedule(zero_small, _restrict_to_box(P, small)).value(root)
        if h_big != h_small:
            disagreements += 1
            if inside:
                contained_disagreements += 1
    logger.info(
        "B_%d vs B_%d at T=%g: %d/%d disagree, %d contained",
        N,
        M,
        T,
        disagreements,
        replicas,
        contained,
    )
    return BoxAgreement(d, N, M, T, replicas, disagreements, contained, contained_disagreements)
