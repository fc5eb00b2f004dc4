import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from ballistic_lab.analysis import goodness_of_fit
from ballistic_lab.dynamics import ChainConfig, run_discrete
from ballistic_lab.errors import EnumerationBudgetError, InvalidParameterError
from ballistic_lab.lattice import BoxSpec
from ballistic_lab.oracles import (
    ExactLaw,
    brute_force_chain_law,
    gamma_cdf,
    gamma_tail_bound,
    geometric_count_pmf,
    geometric_count_sf,
    max_mean_gap,
)


def test_max_mean_gap_examples():
    assert max_mean_gap([0, 1]) == (Fraction(1, 2), Fraction(1, 4))
    assert max_mean_gap([4, 4, 4]) == (0, 0)
    assert max_mean_gap([0, 0, 3]) == (2, Fraction(1, 2))


def test_max_mean_gap_needs_two_values():
    with pytest.raises(InvalidParameterError):
        max_mean_gap([1])


def test_max_mean_gap_holds_on_random_vectors(rng):
    for _ in range(2000):
        n = int(rng.integers(2, 12))
        lhs, rhs = max_mean_gap([int(v) for v in rng.integers(-50, 51, n)])
        assert lhs >= rhs
        lhs, rhs = max_mean_gap(rng.standard_normal(n).tolist())
        assert lhs - rhs >= -1e-12


def test_gamma_bound_examples():
    assert gamma_tail_bound(1, 0.5) == pytest.approx(0.8244, abs=1e-4)
    assert gamma_cdf(1, 0.5) == pytest.approx(1 - math.exp(-0.5))
    assert gamma_tail_bound(10, 0.5) == pytest.approx(0.1448, abs=1e-4)
    assert gamma_cdf(10, 5.0) == pytest.approx(0.0318, abs=1e-4)
    assert gamma_tail_bound(3, 0.999999) == pytest.approx(1.0, abs=1e-6)


def test_gamma_bound_dominates_exact_cdf():
    for n in range(1, 51):
        for a in np.round(np.arange(0.1, 1.0, 0.1), 1):
            assert gamma_cdf(n, a * n) <= gamma_tail_bound(n, float(a))


@pytest.mark.parametrize("n", [1, 2, 5, 17, 50])
@pytest.mark.parametrize("x", [0.3, 1.0, 4.5, 20.0, 60.0])
def test_gamma_cdf_matches_poisson_sum(n, x):
    # P(Gamma(n, 1) <= x) = P(Poisson(x) >= n)
    below = sum(math.exp(-x) * x**k / math.factorial(k) for k in range(n))
    assert gamma_cdf(n, x) == pytest.approx(1 - below, rel=1e-9, abs=1e-12)


def test_gamma_cdf_is_zero_at_nonpositive_x():
    assert gamma_cdf(3, 0.0) == 0.0
    assert gamma_cdf(3, -1.0) == 0.0


@pytest.mark.parametrize("n,a", [(0, 0.5), (3, 0.0), (3, 1.0), (2.5, 0.5)])
def test_gamma_bound_domain(n, a):
    with pytest.raises(InvalidParameterError):
        gamma_tail_bound(n, a)


def test_geometric_count_examples():
    assert geometric_count_pmf(5, 1, 0) == Fraction(1, 6)
    assert geometric_count_pmf(5, 1, 1) == Fraction(5, 36)
    total = sum(geometric_count_pmf(5, 1, j) for j in range(60)) + geometric_count_sf(5, 1, 60)
    assert total == 1
    assert geometric_count_pmf(5, 1.0, 1) == pytest.approx(5 / 36)


def test_exact_law_point_mass_on_single_site():
    law = brute_force_chain_law(1, 0, 4)
    assert law.support() == [(4,)]
    assert law[(4,)] == 1


def test_exact_law_one_step():
    law = brute_force_chain_law(1, 1, 1)
    third = Fraction(1, 3)
    assert dict(law.probabilities) == {(1, 0, 0): third, (0, 1, 0): third, (0, 0, 1): third}


def test_exact_law_two_steps():
    law = brute_force_chain_law(1, 1, 2)
    assert law[(1, 1, 0)] == law[(0, 1, 1)] == law[(1, 0, 1)] == Fraction(2, 9)
    assert law[(2, 0, 0)] == law[(0, 2, 0)] == law[(0, 0, 2)] == Fraction(1, 9)
    assert law[(0, 1, 0)] == 0
    assert law.total() == 1


def test_exact_law_budget():
    with pytest.raises(EnumerationBudgetError):
        brute_force_chain_law(1, 1, 13)
    assert len(brute_force_chain_law(1, 1, 3, budget=27)) > 0


def test_exact_law_must_normalise():
    with pytest.raises(ValueError):
        ExactLaw(BoxSpec(1, 0), {(1,): Fraction(1, 2)})


def test_monte_carlo_matches_exact_law(rng):
    cfg = ChainConfig(BoxSpec(1, 1))
    for steps in (1, 3, 5):
        law = brute_force_chain_law(1, 1, steps)
        runs = 6000
        counts = Counter(
            tuple(run_discrete(cfg, steps, rng).final.flat().tolist()) for _ in range(runs)
        )
        assert set(counts) <= set(law.probabilities)
        expected = {k: float(p) for k, p in law.probabilities.items()}
        report = goodness_of_fit(counts, expected)
        assert report.p_value > 1e-3
