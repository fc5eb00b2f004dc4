"""Frozen Monte Carlo baselines. Deselected by default; run with ``pytest -m slow``."""

import numpy as np
import pytest

from ballistic_lab.analysis import estimate_alpha_beta, l1_stability
from ballistic_lab.replicas import replica_rng
from ballistic_lab.sampler import SamplerMode, SamplerParams

pytestmark = pytest.mark.slow

# mean |u(e_1)| over 2000 replicas, geometric sampler at d=1
L1_BASELINES = {
    (100, 1e-3): 1.552,
    (200, 5e-4): 1.594,
    (400, 400**-1.5): 1.754,
}
ALPHA_OVER_T = {500.0: 2.1183, 1000.0: 2.1269}


def test_l1_baselines():
    configs = [
        SamplerParams(d=1, N=N, mode=SamplerMode.GEOMETRIC, value=p, seed=i, replicas=2000)
        for i, (N, p) in enumerate(L1_BASELINES)
    ]
    report = l1_stability(configs)
    assert report.passed
    for row, expected in zip(report.details["configs"], L1_BASELINES.values()):
        assert abs(row["mean_abs_u"] - expected) < 4 * row["stderr"], row


def test_alpha_over_t_baseline():
    times = list(ALPHA_OVER_T)
    alpha, _ = estimate_alpha_beta(1, 8000, times, 4, replica_rng(0, 1), margin=2000)
    ratios = alpha.means / alpha.times
    tolerance = np.maximum(4 * alpha.stderrs / alpha.times, 0.01)
    expected = np.array(list(ALPHA_OVER_T.values()))
    assert np.all(np.abs(ratios - expected) < tolerance), ratios
