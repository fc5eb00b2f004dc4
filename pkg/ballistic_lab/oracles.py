"""Closed-form laws and exact references for validating the simulators."""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Dict, List, Sequence, Tuple, Union

from scipy import special

from .dynamics import deposit
from .errors import EnumerationBudgetError, InvalidParameterError
from .lattice import BoxSpec, HeightField, box_sites

__all__ = [
    "ExactLaw",
    "max_mean_gap",
    "gamma_tail_bound",
    "gamma_cdf",
    "geometric_count_pmf",
    "geometric_count_sf",
    "brute_force_chain_law",
    "ENUMERATION_BUDGET",
]

logger = logging.getLogger(__name__)

ENUMERATION_BUDGET = 10**6

Number = Union[int, float, Fraction]
Outcome = Tuple[int, ...]


@dataclass(frozen=True)
class ExactLaw:
    """Exact distribution of the box heights (canonical order) as rationals."""

    box: BoxSpec
    probabilities: Dict[Outcome, Fraction]

    def __post_init__(self):
        if any(p < 0 for p in self.probabilities.values()):
            raise ValueError("probabilities must be nonnegative")
        total = sum(self.probabilities.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")

    def __getitem__(self, outcome: Sequence[int]) -> Fraction:
        return self.probabilities.get(tuple(outcome), Fraction(0))

    def __len__(self) -> int:
        return len(self.probabilities)

    def support(self) -> List[Outcome]:
        return sorted(self.probabilities)

    def total(self) -> Fraction:
        return sum(self.probabilities.values(), Fraction(0))

    def expected_counts(self, n: int) -> Dict[Outcome, float]:
        return {k: float(p) * n for k, p in sorted(self.probabilities.items())}


def max_mean_gap(xs: Sequence[Number]) -> Tuple[Number, Number]:
    """``(max(xs) - mean(xs), sum_{i<j} |x_i - x_j| / (2 n (n - 1)))``; the first always
    dominates the second. Integer and rational inputs are evaluated exactly."""
    n = len(xs)
    if n < 2:
        raise InvalidParameterError(f"need at least 2 values, got {n}")
    exact = all(isinstance(x, (int, Rational)) for x in xs)
    vals = sorted(Fraction(x) for x in xs) if exact else sorted(float(x) for x in xs)
    # sum_{i<j} |x_i - x_j| over sorted values
    pair_sum = sum((2 * i - n + 1) * x for i, x in enumerate(vals))
    if exact:
        lhs = vals[-1] - sum(vals, Fraction(0)) / n
        rhs = pair_sum / (2 * n * (n - 1))
        return lhs, rhs
    return vals[-1] - math.fsum(vals) / n, pair_sum / (2 * n * (n - 1))


def _check_gamma_args(n: int, a: float) -> None:
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"shape n must be an integer >= 1, got {n}")
    if not 0 < a < 1:
        raise InvalidParameterError(f"a must lie in (0, 1), got {a}")


def gamma_tail_bound(n: int, a: float) -> float:
    """Upper bound ``exp((1 - a + log a) n)`` on ``Pr(Gamma(n, 1) <= a n)``."""
    _check_gamma_args(n, a)
    return math.exp((1.0 - a + math.log(a)) * n)


def gamma_cdf(n: int, x: float) -> float:
    """``Pr(Gamma(n, 1) <= x)`` for integer shape ``n`` (regularised lower incomplete gamma)."""
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"shape n must be an integer >= 1, got {n}")
    if x <= 0:
        return 0.0
    return float(special.gammainc(int(n), x))


def _count_ratio(B: int, a: Number) -> Number:
    if int(B) != B or B < 1:
        raise InvalidParameterError(f"B must be an integer >= 1, got {B}")
    if not a > 0:
        raise InvalidParameterError(f"a must be > 0, got {a}")
    return Fraction(B) * Fraction(a) if isinstance(a, (int, Rational)) else B * float(a)


def geometric_count_pmf(B: int, a: Number, j: int) -> Number:
    """``Pr(K = j) = (B a)^j / (B a + 1)^(j + 1)``: the update count of the continuous dynamics
    on ``B`` sites run to an Exponential(mean ``a``) time. Exact for rational ``a``."""
    if int(j) != j or j < 0:
        raise InvalidParameterError(f"j must be an integer >= 0, got {j}")
    q = _count_ratio(B, a)
    if isinstance(q, Fraction):
        return q**j / (q + 1) ** (j + 1)
    return math.exp(j * math.log(q / (q + 1))) / (q + 1)


def geometric_count_sf(B: int, a: Number, j: int) -> Number:
    """``Pr(K >= j) = (B a / (B a + 1))^j``."""
    if int(j) != j or j < 0:
        raise InvalidParameterError(f"j must be an integer >= 0, got {j}")
    q = _count_ratio(B, a)
    if isinstance(q, Fraction):
        return (q / (q + 1)) ** j
    return math.exp(j * math.log(q / (q + 1)))


def brute_force_chain_law(
    d: int, N: int, steps: int, budget: int = ENUMERATION_BUDGET
) -> ExactLaw:
    """Exact law of the discrete chain on ``B_N`` after ``steps`` uniform-site updates.

    Every site sequence has probability ``|B_N|^-steps``; sequences reaching the same field are
    merged after each step, which sums over exactly the same sequences as listing all of them.
    """
    if steps < 0:
        raise InvalidParameterError(f"steps must be >= 0, got {steps}")
    box = BoxSpec(d, N)
    if box.size**steps > budget:
        raise EnumerationBudgetError(
            f"|B_{N}|^{steps} = {box.size}^{steps} sequences exceed the budget of {budget}"
        )
    sites = box_sites(box)
    share = Fraction(1, box.size)
    layer: Dict[Outcome, Tuple[HeightField, Fraction]] = {}
    zero = HeightField.zeros(box)
    layer[tuple(zero.flat().tolist())] = (zero, Fraction(1))
    for _ in range(steps):
        nxt: Dict[Outcome, Tuple[HeightField, Fraction]] = {}
        for h, p in layer.values():
            for x in sites:
                g = deposit(h, x)
                key = tuple(g.flat().tolist())
                prev = nxt.get(key)
                nxt[key] = (g, p * share + (prev[1] if prev else 0))
        layer = nxt
    logger.debug("exact law on B_%d after %d steps: %d outcomes", N, steps, len(layer))
    return ExactLaw(box, {k: p for k, (_, p) in layer.items()})
