import math

import numpy as np
import pytest

from ballistic_lab.cluster import (
    LazySchedule,
    box_agreement,
    explore,
    radius_tail,
    stabilization_check,
)
from ballistic_lab.dynamics import ChainConfig, UpdateSchedule, generate_schedule
from ballistic_lab.errors import InvalidParameterError, OutsideBoxError
from ballistic_lab.lattice import Boundary, BoxSpec, HeightField, box_sites, neighbors


def _schedule(site_times, N=5, horizon=1.0):
    box = BoxSpec(1, N)
    return UpdateSchedule.from_site_times(box, horizon, {(x,): ts for x, ts in site_times.items()})


def test_explore_empty_schedule():
    res = explore((0,), _schedule({}))
    assert res.sites == {(0,)}
    assert (res.K, res.rho) == (0, 0)


def test_explore_single_event():
    res = explore((0,), _schedule({0: [0.5]}))
    assert res.sites == {(-1,), (0,), (1,)}
    assert (res.K, res.rho) == (1, 1)


def test_explore_follows_earlier_neighbour_event():
    res = explore((0,), _schedule({0: [0.5], 1: [0.3]}))
    assert res.times == (0.5, 0.3)
    assert res.sites == {(-1,), (0,), (1,), (2,)}
    assert (res.K, res.rho) == (2, 2)


def test_explore_ignores_later_neighbour_event():
    res = explore((0,), _schedule({0: [0.5], 1: [0.7]}))
    assert res.K == 1
    assert res.sites == {(-1,), (0,), (1,)}


def test_explore_root_outside_box():
    with pytest.raises(OutsideBoxError):
        explore((9,), _schedule({}))


def test_explore_flags_escape():
    res = explore((1,), _schedule({1: [0.5]}, N=1))
    assert res.escaped
    assert (2,) in res.sites


def test_cluster_size_bound(rng):
    cfg = ChainConfig(BoxSpec(2, 6))
    for _ in range(50):
        P = generate_schedule(cfg, 1.0, rng)
        res = explore((0, 0), P)
        assert res.size <= 2 * 2 * res.K + 1
        assert list(res.times) == sorted(res.times, reverse=True)


def _connected(sites, root):
    seen, frontier = {root}, [root]
    while frontier:
        y = frontier.pop()
        for z in neighbors(y):
            if z in sites and z not in seen:
                seen.add(z)
                frontier.append(z)
    return seen == set(sites)


@pytest.mark.parametrize("d", [1, 2])
def test_cluster_is_connected_and_holds_root(rng, d):
    cfg = ChainConfig(BoxSpec(d, 8 if d == 1 else 4))
    root = (0,) * d
    for _ in range(50):
        res = explore(root, generate_schedule(cfg, 2.0, rng))
        assert root in res.sites
        assert _connected(res.sites, root)


def test_cluster_shrinks_with_horizon(rng):
    cfg = ChainConfig(BoxSpec(1, 15))
    for _ in range(50):
        P = generate_schedule(cfg, 3.0, rng)
        full = explore((0,), P)
        for horizon in (0.5, 1.5, 2.5):
            cut = explore((0,), P.restrict(horizon))
            assert cut.sites <= full.sites
            assert set(cut.times) <= set(full.times)
            assert cut.K <= full.K


def test_lazy_schedule_is_cached_and_sorted(rng):
    lazy = LazySchedule(BoxSpec(1, 3), 4.0, rng)
    ts = lazy.times_at((1,))
    assert ts == sorted(ts)
    assert lazy.times_at((1,)) is ts
    assert lazy.times_at((9,)) == []


def test_stabilization_empty_schedule():
    box = BoxSpec(1, 5)
    f = HeightField.from_heights(box, np.arange(box.size), Boundary.FROZEN_INITIAL)
    rep = stabilization_check(f, UpdateSchedule.empty(box, 1.0), (2,))
    assert rep.passed
    assert rep.value == f.value((2,))


def test_stabilization_single_event():
    box = BoxSpec(1, 5)
    f = HeightField.zeros(box, Boundary.FROZEN_INITIAL)
    P = _schedule({0: [0.5]})
    rep = stabilization_check(f, P, (0,), supersets=[box_sites(box)])
    assert rep.passed
    assert rep.value == 1
    assert set(rep.values.values()) == {1}


def test_stabilization_rejects_small_superset():
    f = HeightField.zeros(BoxSpec(1, 5), Boundary.FROZEN_INITIAL)
    with pytest.raises(InvalidParameterError):
        stabilization_check(f, _schedule({0: [0.5]}), (0,), supersets=[[(0,)]])


def test_stabilization_random_schedules(rng):
    box = BoxSpec(1, 20)
    cfg = ChainConfig(box)
    checked = 0
    for _ in range(200):
        f = HeightField.from_padded(box, rng.integers(-5, 6, size=box.padded_shape))
        rep = stabilization_check(f, generate_schedule(cfg, 3.0, rng), (0,))
        if not rep.escaped:
            checked += 1
            assert rep.stable, rep.values
    assert checked > 150


def test_radius_tail_at_zero_time(rng):
    tail = radius_tail(1, 10, [0.0], 200, c=1.5, rng=rng)
    row = tail.rows[0]
    assert row.probability == 0
    assert row.at_least_one == 0


def test_radius_tail_first_step_probability(rng):
    tail = radius_tail(1, 10, [1.0], 4000, rng=rng)
    p = tail.rows[0].at_least_one
    expected = 1 - math.exp(-1.0)
    assert abs(p - expected) < 4 * math.sqrt(expected * (1 - expected) / 4000)


def test_radius_tail_decays(rng):
    tail = radius_tail(1, 60, [4.0, 8.0, 12.0], 1500, c=1.5, rng=rng)
    probs = [r.probability for r in tail.rows]
    assert probs[0] > probs[1] > probs[2]
    assert tail.slope < 0
    assert [row["T"] for row in tail.to_rows()] == [4.0, 8.0, 12.0]


def test_radius_tail_rejects_bad_arguments(rng):
    with pytest.raises(InvalidParameterError):
        radius_tail(1, 10, [1.0], 0, rng=rng)
    with pytest.raises(InvalidParameterError):
        radius_tail(1, 10, [1.0], 10, c=0, rng=rng)


def test_box_agreement_contained_clusters_agree(rng):
    res = box_agreement(1, 6, 12, 2.0, 300, rng)
    assert res.contained_disagreements == 0
    assert res.contained > 0
    assert 0 <= res.disagreement_rate <= 1 - res.containment_rate + 1e-12


def test_box_agreement_needs_larger_outer_box(rng):
    with pytest.raises(InvalidParameterError):
        box_agreement(1, 6, 4, 1.0, 10, rng)
