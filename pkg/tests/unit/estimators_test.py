import math

import numpy as np
import pytest

from ballistic_lab.analysis import (
    EstimateSeries,
    alpha_growth_ratio,
    alpha_stability_check,
    check_growth_inequality,
    estimate_alpha_beta,
    growth_samples,
    l1_bound_check,
    l1_stability,
)
from ballistic_lab.errors import EmptyInputError, InvalidParameterError
from ballistic_lab.sampler import SamplerMode, SamplerParams


def test_single_site_alpha_is_poisson_mean(rng):
    alpha, beta = estimate_alpha_beta(1, 0, [0.0, 1.0, 2.0], 3000, rng)
    assert alpha.means[0] == 0
    for t, m, se in zip(alpha.times, alpha.means, alpha.stderrs):
        assert abs(m - t) <= 4 * max(se, 1e-12)


def test_beta_dominates_alpha_per_replica(rng):
    alpha, beta = growth_samples(1, 15, [0.5, 1.0, 2.0], 50, rng, margin=5)
    assert alpha.shape == beta.shape == (50, 3)
    assert np.all(beta >= alpha)


def test_growth_grid_must_increase(rng):
    with pytest.raises(InvalidParameterError):
        growth_samples(1, 5, [1.0, 1.0], 10, rng)
    with pytest.raises(InvalidParameterError):
        growth_samples(1, 5, [1.0], 0, rng)


def test_estimate_series_rows():
    series = EstimateSeries.from_samples("alpha", [1.0, 2.0], np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert series.to_rows()[0] == {"t": 1.0, "mean": 2.0, "stderr": 1.0, "replicas": 2}
    assert series.at(2.0) == (3.0, 1.0)


def test_growth_inequality_holds(rng):
    report = check_growth_inequality(1, 20, 1.0, 0.1, 1000, rng, margin=10)
    assert report.decision == "pass"
    assert report.passed
    assert report.details["lhs"] > 0
    assert report.details["rhs"] > 0


def test_growth_inequality_tiny_delta_is_underpowered(rng):
    report = check_growth_inequality(1, 3, 1.0, 1e-4, 20, rng)
    assert report.decision == "insufficient-power"
    assert report.passed


def test_growth_inequality_rejects_bad_delta(rng):
    with pytest.raises(InvalidParameterError):
        check_growth_inequality(1, 5, 1.0, 0.0, 10, rng)


def test_l1_bound_on_short_horizon(rng):
    report = l1_bound_check(1, 40, 5.0, 40, rng)
    assert report.name == "l1-bound"
    assert report.passed
    assert report.details["mean_t"] > 0


def test_l1_stability_at_matched_mean_time():
    a = 6.0
    configs = [
        SamplerParams(
            d=1,
            N=N,
            mode=SamplerMode.GEOMETRIC,
            value=1.0 / ((2 * N + 1) * a + 1),
            seed=N,
            replicas=1500,
        )
        for N in (20, 30)
    ]
    report = l1_stability(configs)
    assert report.passed, report.details


def test_l1_stability_needs_configs():
    with pytest.raises(EmptyInputError):
        l1_stability([])


def _series(times, ratios):
    times = np.asarray(times, dtype=float)
    means = times * np.asarray(ratios, dtype=float)
    zeros = np.zeros(len(times))
    return EstimateSeries("alpha", times, means, zeros, np.ones(len(times)))


def test_alpha_growth_ratio():
    rows = alpha_growth_ratio(_series([0.0, 10.0, 20.0], [1.0, 1.0, 1.02]))
    assert len(rows) == 1
    assert rows[0]["relative_change"] == pytest.approx(0.02 / 1.02)


def test_alpha_stability_check():
    assert alpha_stability_check(_series([10.0, 20.0], [1.0, 1.01])).passed
    assert not alpha_stability_check(_series([10.0, 20.0], [1.0, 1.5])).passed
    with pytest.raises(EmptyInputError):
        alpha_stability_check(_series([0.0, 10.0], [1.0, 1.0]))


def test_alpha_is_sublinear_bounded(rng):
    alpha, _ = estimate_alpha_beta(1, 60, [5.0, 10.0, 20.0], 6, rng, margin=40)
    ratios = alpha.means / alpha.times
    assert np.all(ratios > 1.0)
    assert np.all(np.isfinite(ratios))
    assert ratios[-1] < 5.0
    assert math.isfinite(alpha_growth_ratio(alpha)[-1]["relative_change"])
