"""
Monte Carlo growth estimators.

``alpha(t)`` is the mean height at a site after time ``t`` started from the zero field, and
``beta(t)`` the mean of ``max(h(t, x), max_i h(t, x +- e_i))``. Both are translation invariant
on the infinite lattice, so on a box the estimators may average over the central sites
``|x|_inf <= N - margin`` as well as use the origin; boundary sites grow slower and must be kept
out by the margin.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..dynamics import ChainConfig, run_continuous
from ..errors import EmptyInputError, InvalidParameterError
from ..lattice import BoxSpec, HeightField, unit
from ..sampler import SamplerParams, draw_samples
from .stat_tests import TestReport

__all__ = [
    "EstimateSeries",
    "estimate_alpha_beta",
    "growth_samples",
    "check_growth_inequality",
    "l1_bound_check",
    "l1_stability",
    "alpha_growth_ratio",
    "alpha_stability_check",
]

logger = logging.getLogger(__name__)

# Below this many expected updates in (t, t + delta] the increment is not resolved at all.
_MIN_EXPECTED_UPDATES = 100


@dataclass(frozen=True)
class EstimateSeries:
    name: str
    times: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    counts: np.ndarray
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.times) == len(self.means) == len(self.stderrs) == len(self.counts)):
            raise ValueError("series columns must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must be strictly increasing")

    @classmethod
    def from_samples(
        cls, name: str, times: Sequence[float], samples: np.ndarray, **params: Any
    ) -> "EstimateSeries":
        """``samples[r, k]`` is replica ``r``'s value at ``times[k]``."""
        samples = np.asarray(samples, dtype=np.float64)
        n = samples.shape[0]
        means = samples.mean(axis=0) if n else np.full(len(times), np.nan)
        errs = samples.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(len(times))
        return cls(
            name,
            np.asarray(times, dtype=np.float64),
            means,
            errs,
            np.full(len(times), n, dtype=np.int64),
            params,
        )

    def __len__(self) -> int:
        return len(self.times)

    def at(self, t: float) -> Tuple[float, float]:
        k = int(np.searchsorted(self.times, t))
        if k >= len(self.times) or self.times[k] != t:
            raise KeyError(f"t={t} is not on the grid")
        return float(self.means[k]), float(self.stderrs[k])

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {"t": float(t), "mean": float(m), "stderr": float(s), "replicas": int(c)}
            for t, m, s, c in zip(self.times, self.means, self.stderrs, self.counts)
        ]


def _central(box: BoxSpec, margin: Optional[int]) -> Tuple[slice, ...]:
    """Slice of the box heights array covering ``|x|_inf <= N - margin`` (origin only when
    ``margin`` is None)."""
    N = box.N
    r = 0 if margin is None else max(0, N - margin)
    return (slice(N - r, N + r + 1),) * box.d


def _beta_heights(h: HeightField) -> np.ndarray:
    """``max(h(x), max_i h(x +- e_i))`` at every box site, using the collar outside."""
    box = h.box
    inner = box.interior_slice()
    out = h.padded[inner].copy()
    for axis in range(box.d):
        for step in (1, -1):
            shifted = tuple(
                slice(s.start + step, s.stop + step) if a == axis else s
                for a, s in enumerate(inner)
            )
            np.maximum(out, h.padded[shifted], out=out)
    return out


def growth_samples(
    d: int,
    N: int,
    t_grid: Sequence[float],
    replicas: int,
    rng: Optional[np.random.Generator] = None,
    margin: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-replica ``alpha`` and ``beta`` samples, each of shape ``(replicas, len(t_grid))``.

    Each replica is one continuous run to ``max(t_grid)`` with snapshots at the grid times.
    """
    grid = [float(t) for t in t_grid]
    if any(t < 0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParameterError("t grid must be nonnegative and strictly increasing")
    if replicas < 1:
        raise InvalidParameterError(f"replicas must be >= 1, got {replicas}")
    box = BoxSpec(d, N)
    reach = N if margin is None else margin
    if grid and reach < 2 * grid[-1]:
        logger.warning(
            "B_%d (margin %s) is small for t=%g; boundary effects may bias the estimates",
            N,
            margin,
            grid[-1],
        )
    rng = rng if rng is not None else np.random.default_rng()
    cfg = ChainConfig(box)
    sl = _central(box, margin)
    alpha = np.zeros((replicas, len(grid)))
    beta = np.zeros((replicas, len(grid)))
    for r in range(replicas):
        res = run_continuous(cfg, grid[-1] if grid else 0.0, rng, snapshot_times=grid)
        for k, snap in enumerate(res.snapshots):
            alpha[r, k] = snap.field.heights[sl].mean()
            beta[r, k] = _beta_heights(snap.field)[sl].mean()
        logger.debug("growth replica %d: %d events", r, res.events)
    return alpha, beta


def estimate_alpha_beta(
    d: int,
    N: int,
    t_grid: Sequence[float],
    replicas: int,
    rng: Optional[np.random.Generator] = None,
    margin: Optional[int] = None,
) -> Tuple[EstimateSeries, EstimateSeries]:
    """Monte Carlo ``alpha(t)`` and ``beta(t)`` with standard errors over replicas.

    ``beta >= alpha`` holds replica by replica, not only in the mean.
    """
    alpha, beta = growth_samples(d, N, t_grid, replicas, rng, margin)
    params = {"d": d, "N": N, "margin": margin}
    return (
        EstimateSeries.from_samples("alpha", t_grid, alpha, **params),
        EstimateSeries.from_samples("beta", t_grid, beta, **params),
    )


def check_growth_inequality(
    d: int,
    N: int,
    t: float,
    delta: float,
    replicas: int,
    rng: Optional[np.random.Generator] = None,
    margin: Optional[int] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> TestReport:
    """One-sided check of ``alpha(t + delta) - alpha(t) >= delta e^{-(2d+1) delta} (beta(t) -
    alpha(t))``.

    The two sides come from the same runs, so the test works on the per-replica difference
    ``Z = [alpha(t+delta) - alpha(t)] - c [beta(t) - alpha(t)]`` and fails when its mean is
    more than ``growth_sigmas`` standard errors below zero. When the right-hand side itself is
    within that many standard errors of zero the report says ``insufficient-power`` instead of
    passing on noise.
    """
    if not delta > 0:
        raise InvalidParameterError(f"delta must be > 0, got {delta}")
    if replicas < 2:
        raise InvalidParameterError("need at least 2 replicas for a standard error")
    alpha, beta = growth_samples(d, N, [t, t + delta], replicas, rng, margin)
    c = delta * math.exp(-(2 * d + 1) * delta)
    increment = alpha[:, 1] - alpha[:, 0]
    gap = beta[:, 0] - alpha[:, 0]
    z = increment - c * gap
    se = float(z.std(ddof=1) / math.sqrt(replicas))
    mean_z = float(z.mean())
    rhs = c * float(gap.mean())
    k = tolerances.growth_sigmas
    sites = int(np.prod([s.stop - s.start for s in _central(BoxSpec(d, N), margin)]))
    expected_updates = replicas * sites * delta
    if not gap.any():
        decision = "pass"
    elif expected_updates < _MIN_EXPECTED_UPDATES:
        decision = "insufficient-power"
    elif mean_z < -k * se:
        decision = "fail"
    elif rhs < k * se:
        decision = "insufficient-power"
    else:
        decision = "pass"
    logger.info(
        "growth inequality at t=%g, delta=%g: %s (Z=%.4g, se=%.3g)", t, delta, decision, mean_z, se
    )
    return TestReport(
        name="growth-inequality",
        statistic=mean_z / se if se > 0 else 0.0,
        p_value=None,
        tv_distance=None,
        tv_null=None,
        tv_excess=None,
        sample_sizes=(replicas,),
        threshold=-k,
        passed=decision != "fail",
        decision=decision,
        params={"d": d, "N": N, "t": t, "delta": delta, "margin": margin},
        details={
            "lhs": float(increment.mean()),
            "rhs": rhs,
            "mean_difference": mean_z,
            "stderr": se,
            "alpha_t": float(alpha[:, 0].mean()),
            "beta_t": float(beta[:, 0].mean()),
            "expected_updates": expected_updates,
        },
    )


def _time_averaged_gap(
    box: BoxSpec, t: float, replicas: int, rng: np.random.Generator, times_per_run: int
) -> np.ndarray:
    """Per-replica mean of ``|h(s, e_1) - h(s, 0)|`` over ``times_per_run`` uniform ``s``."""
    cfg = ChainConfig(box)
    e1 = unit(box.d, 0)
    o = (0,) * box.d
    out = np.zeros(replicas)
    for r in range(replicas):
        times = np.sort(rng.random(times_per_run) * t)
        res = run_continuous(cfg, t, rng, snapshot_times=times.tolist())
        out[r] = np.mean([abs(s.field.value(e1) - s.field.value(o)) for s in res.snapshots])
    return out


def l1_bound_check(
    d: int,
    N: int,
    t: float,
    replicas: int,
    rng: Optional[np.random.Generator] = None,
    times_per_run: int = 4,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> TestReport:
    """Time-averaged ``E|h(s, e_1) - h(s, 0)|`` over ``s`` in ``[0, t]`` and ``[0, 2t]``; the
    check passes when the ratio of the two lies in the configured band (no growth with t)."""
    if t < 0:
        raise InvalidParameterError(f"t must be >= 0, got {t}")
    if replicas < 2:
        raise InvalidParameterError("need at least 2 replicas for a standard error")
    rng = rng if rng is not None else np.random.default_rng()
    box = BoxSpec(d, N)
    short = _time_averaged_gap(box, t, replicas, rng, times_per_run)
    long = _time_averaged_gap(box, 2 * t, replicas, rng, times_per_run)
    m1, m2 = float(short.mean()), float(long.mean())
    if m1 == 0 and m2 == 0:
        ratio = 1.0
    else:
        ratio = m2 / m1 if m1 > 0 else math.inf
    low, high = tolerances.l1_ratio_low, tolerances.l1_ratio_high
    passed = low <= ratio <= high
    return TestReport(
        name="l1-bound",
        statistic=ratio,
        p_value=None,
        tv_distance=None,
        tv_null=None,
        tv_excess=None,
        sample_sizes=(replicas, replicas),
        threshold=high,
        passed=passed,
        decision="pass" if passed else "fail",
        params={"d": d, "N": N, "t": t, "times_per_run": times_per_run},
        details={
            "mean_t": m1,
            "stderr_t": float(short.std(ddof=1) / math.sqrt(replicas)),
            "mean_2t": m2,
            "stderr_2t": float(long.std(ddof=1) / math.sqrt(replicas)),
            "band": [low, high],
        },
    )


def l1_stability(
    configs: Sequence[SamplerParams],
    workers: int = 1,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> TestReport:
    """``E|u(e_1)|`` for each sampler configuration; passes when the largest relative
    deviation from the overall mean is within ``l1_stability``."""
    if not configs:
        raise EmptyInputError("no sampler configurations")
    rows = []
    for params in configs:
        samples = draw_samples(params, workers)
        if not samples:
            raise EmptyInputError(f"no replicas for {params}")
        e1 = unit(params.d, 0)
        vals = np.array([abs(s.value(e1)) for s in samples], dtype=np.float64)
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        rows.append({**params.to_dict(), "mean_abs_u": float(vals.mean()), "stderr": se})
    means = np.array([r["mean_abs_u"] for r in rows])
    centre = float(means.mean())
    spread = float(np.max(np.abs(means - centre)) / centre) if centre > 0 else 0.0
    passed = spread <= tolerances.l1_stability
    return TestReport(
        name="l1-stability",
        statistic=spread,
        p_value=None,
        tv_distance=None,
        tv_null=None,
        tv_excess=None,
        sample_sizes=tuple(p.replicas for p in configs),
        threshold=tolerances.l1_stability,
        passed=passed,
        decision="pass" if passed else "fail",
        details={"configs": rows, "mean": centre},
    )


def alpha_growth_ratio(series: EstimateSeries) -> List[Dict[str, float]]:
    """Relative change of ``alpha(t) / t`` between consecutive positive grid times."""
    rows = []
    pts = [(t, m) for t, m in zip(series.times, series.means) if t > 0]
    for (t0, m0), (t1, m1) in zip(pts, pts[1:]):
        r0, r1 = m0 / t0, m1 / t1
        rows.append(
            {
                "t0": float(t0),
                "t1": float(t1),
                "ratio_t0": float(r0),
                "ratio_t1": float(r1),
                "relative_change": float(abs(r1 - r0) / r1) if r1 else math.inf,
            }
        )
    return rows


def alpha_stability_check(
    series: EstimateSeries, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> TestReport:
    rows = alpha_growth_ratio(series)
    if not rows:
        raise EmptyInputError("need two positive grid times")
    last = rows[-1]["relative_change"]
    passed = last < tolerances.alpha_stability
    return TestReport(
        name="alpha-stability",
        statistic=last,
        p_value=None,
        tv_distance=None,
        tv_null=None,
        tv_excess=None,
        sample_sizes=(int(series.counts[0]),),
        threshold=tolerances.alpha_stability,
        passed=passed,
        decision="pass" if passed else "fail",
        params=dict(series.params),
        details={"ratios": rows},
    )
