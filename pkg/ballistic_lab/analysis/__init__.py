from .estimators import (
    EstimateSeries,
    alpha_growth_ratio,
    alpha_stability_check,
    check_growth_inequality,
    estimate_alpha_beta,
    growth_samples,
    l1_bound_check,
    l1_stability,
)
from .exploratory import (
    CorrelationRow,
    TailProfile,
    axis_pairs,
    correlation_decay,
    height_growth_profile,
    tail_profile,
)
from .histogram import Histogram
from .stat_tests import (
    INVARIANCE_MODES,
    TestReport,
    goodness_of_fit,
    invariance_tests,
    stationarity_test,
    two_sample_test,
)
