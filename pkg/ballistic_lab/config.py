"""Numeric defaults and test tolerances.

None of these values come from theory: the existence results give no constants, so every
threshold below is a choice of this project and is recorded in test reports.
"""

from dataclasses import asdict, dataclass

__all__ = ["Tolerances", "DEFAULT_TOLERANCES", "SCHEMA_VERSION", "SEED_MIXER"]

SCHEMA_VERSION = 1

# Name recorded in metadata next to derived seeds.
SEED_MIXER = "splitmix64"


@dataclass(frozen=True)
class Tolerances:
    significance: float = 0.01
    # Gates compare the noise-corrected TV excess against these.
    stationarity_tv: float = 0.03
    invariance_tv: float = 0.05
    min_expected_count: float = 5.0
    histogram_clip: int = 50
    growth_sigmas: float = 3.0
    l1_ratio_low: float = 0.5
    l1_ratio_high: float = 2.0
    # Each end of a 1d influence interval advances at rate 1; c = 8 is beyond MC resolution.
    cluster_tail_c: float = 1.5
    cluster_tail_r2: float = 0.9
    alpha_stability: float = 0.05
    l1_stability: float = 0.10

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()
