from .cluster import box_agreement, explore, radius_tail, stabilization_check
from .config import DEFAULT_TOLERANCES, Tolerances
from .dynamics import ChainConfig, UpdateSchedule, apply_schedule, deposit, generate_schedule
from .dynamics import run_continuous, run_discrete
from .errors import LabError
from .lattice import BoxSpec, CenteredSample, GradientField, HeightField, gradient_field, recenter
from .oracles import brute_force_chain_law, gamma_tail_bound, max_mean_gap
from .sampler import SamplerMode, SamplerParams, draw_samples, sample_one, validate_params
