"""Descriptive measurements on stationary samples. Nothing here is gated."""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..config import DEFAULT_TOLERANCES
from ..errors import DegenerateVarianceError, EmptyInputError
from ..lattice import CenteredSample, Site, l1_norm, origin, unit
from .histogram import Histogram

__all__ = [
    "CorrelationRow",
    "TailProfile",
    "correlation_decay",
    "axis_pairs",
    "tail_profile",
    "height_growth_profile",
]

logger = logging.getLogger(__name__)

MIN_CORRELATION_SAMPLES = 100
MIN_TAIL_SAMPLES = 1000


@dataclass(frozen=True)
class CorrelationRow:
    x: Site
    y: Site
    distance: int
    correlation: float
    stderr: float
    samples: int


def _gradients(samples: Sequence[CenteredSample], x: Site, axis: int) -> np.ndarray:
    return np.array([s.gradient(x, axis) for s in samples], dtype=np.float64)


def axis_pairs(d: int, distances: Sequence[int], axis: int = 0) -> List[Tuple[Site, Site]]:
    """``(0, r e_axis)`` for each distance ``r``."""
    o = origin(d)
    return [(o, tuple(r * c for c in unit(d, axis))) for r in distances]


def correlation_decay(
    samples: Sequence[CenteredSample],
    pairs: Sequence[Tuple[Site, Site]],
    axis: int = 0,
) -> List[CorrelationRow]:
    """Pearson correlation of the gradient component ``axis`` at each site pair."""
    if not samples:
        raise EmptyInputError("no samples")
    n = len(samples)
    if n < MIN_CORRELATION_SAMPLES:
        logger.warning("correlations from %d samples (< %d) are noisy", n, MIN_CORRELATION_SAMPLES)
    rows = []
    for x, y in pairs:
        x, y = tuple(x), tuple(y)
        a, b = _gradients(samples, x, axis), _gradients(samples, y, axis)
        if a.std() == 0 or b.std() == 0:
            raise DegenerateVarianceError(f"gradient at {x} or {y} is constant over the samples")
        r = 1.0 if x == y else float(np.corrcoef(a, b)[0, 1])
        se = math.sqrt(max(0.0, 1 - r * r) / (n - 2)) if n > 2 else math.nan
        dist = l1_norm(tuple(p - q for p, q in zip(x, y)))
        rows.append(CorrelationRow(x, y, dist, r, se, n))
    return rows


@dataclass(frozen=True)
class TailProfile:
    site: Site
    axis: int
    histogram: Histogram
    mean: float
    variance: float
    mean_abs: float
    survival_slope: float
    samples: int

    def summary(self) -> Dict[str, float]:
        return {
            "mean": self.mean,
            "variance": self.variance,
            "mean_abs": self.mean_abs,
            "survival_slope": self.survival_slope,
            "samples": self.samples,
        }


def tail_profile(
    samples: Sequence[CenteredSample],
    site: Optional[Site] = None,
    axis: int = 0,
    clip: int = DEFAULT_TOLERANCES.histogram_clip,
) -> TailProfile:
    """Histogram and moments of one gradient component, plus the slope of
    ``log Pr(|g| >= k)`` against ``k`` (a straight line means an exponential tail)."""
    if not samples:
        raise EmptyInputError("no samples")
    d = samples[0].d
    site = origin(d) if site is None else tuple(site)
    n = len(samples)
    if n < MIN_TAIL_SAMPLES:
        logger.warning("tail profile from %d samples (< %d)", n, MIN_TAIL_SAMPLES)
    g = _gradients(samples, site, axis)
    mags = np.abs(g)
    ks = np.arange(1, int(mags.max()) + 1) if mags.max() > 0 else np.arange(0)
    surv = np.array([(mags >= k).mean() for k in ks])
    keep = surv > 0
    slope = math.nan
    if keep.sum() >= 2:
        slope = float(stats.linregress(ks[keep], np.log(surv[keep])).slope)
    return TailProfile(
        site=site,
        axis=axis,
        histogram=Histogram.from_values(g.astype(np.int64), clip),
        mean=float(g.mean()),
        variance=float(g.var(ddof=1)) if n > 1 else 0.0,
        mean_abs=float(mags.mean()),
        survival_slope=slope,
        samples=n,
    )


def height_growth_profile(
    samples: Sequence[CenteredSample],
    radii: Optional[Sequence[int]] = None,
    axis: int = 0,
) -> Tuple[List[Dict[str, float]], float]:
    """``E|u(r e_axis)|`` against ``r`` with standard errors, and the log-log slope over the
    positive means."""
    if not samples:
        raise EmptyInputError("no samples")
    d, W = samples[0].d, samples[0].window
    if radii is None:
        radii = [r for r in (1, 2, 4, 8, 16, 32, 64, 128, 256, 512) if r <= W]
    rows = []
    n = len(samples)
    for r in radii:
        x = tuple(r * c for c in unit(d, axis))
        vals = np.abs(np.array([s.value(x) for s in samples], dtype=np.float64))
        se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        rows.append({"r": int(r), "mean_abs": float(vals.mean()), "stderr": se})
    pts = [(row["r"], row["mean_abs"]) for row in rows if row["r"] > 0 and row["mean_abs"] > 0]
    slope = math.nan
    if len(pts) >= 2:
        fit = stats.linregress(np.log([p[0] for p in pts]), np.log([p[1] for p in pts]))
        slope = float(fit.slope)
    return rows, slope
