"""Random-waypoint mobility: interpolation, bounds, determinism."""

import math

from hypothesis import given, settings, strategies as st

from drfsim.core import TICKS_PER_SECOND
from drfsim.mobility import RandomWaypointModel, distance


def make_model(speed, seed=1, nodes=1, positions=None):
    return RandomWaypointModel(nodes, 500.0, 500.0, speed, seed,
                               initial_positions=positions)


def test_halfway_along_a_500m_leg():
    # leg (0,0) -> (300,400) is 500 m long; at 5 m/s, 50 s covers half
    m = make_model(5.0, positions=[(0.0, 0.0)])
    leg = m._next_leg(0)
    leg.target = (300.0, 400.0)
    leg.arrive = leg.depart + round(500.0 / 5.0 * TICKS_PER_SECOND)
    m._arrivals[0][-1] = leg.arrive
    x, y = m.position(0, leg.depart + 50 * TICKS_PER_SECOND)
    assert (x, y) == (150.0, 200.0)
    # leg complete: clamped exactly at the target
    assert m.position(0, leg.arrive) == (300.0, 400.0)


def test_speed_zero_is_static():
    m = make_model(0.0, positions=[(120.0, 340.0)])
    for t in (0, 1, TICKS_PER_SECOND, 100 * TICKS_PER_SECOND):
        assert m.position(0, t) == (120.0, 340.0)


def test_same_seed_same_trajectory():
    a = make_model(20.0, seed=7, nodes=3)
    b = make_model(20.0, seed=7, nodes=3)
    ticks = [i * TICKS_PER_SECOND for i in range(0, 100, 7)]
    for node in range(3):
        assert [a.position(node, t) for t in ticks] == \
               [b.position(node, t) for t in ticks]


def test_different_seeds_differ():
    a = make_model(20.0, seed=1)
    b = make_model(20.0, seed=2)
    assert a.position(0, 0) != b.position(0, 0)


def test_nodes_use_independent_streams():
    m = make_model(20.0, seed=1, nodes=2)
    assert m.position(0, 0) != m.position(1, 0)


def test_waypoints_uniform_over_grid():
    # law of large numbers: mean of many uniform draws is near the center
    m = make_model(1000.0, positions=[(250.0, 250.0)])
    targets = [m._next_leg(0).target for _ in range(10_000)]
    mx = sum(x for x, _ in targets) / len(targets)
    my = sum(y for _, y in targets) / len(targets)
    assert abs(mx - 250.0) < 10.0
    assert abs(my - 250.0) < 10.0
    assert all(0.0 <= x <= 500.0 and 0.0 <= y <= 500.0 for x, y in targets)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 1000), speed=st.sampled_from([1.0, 10.0, 30.0, 50.0]),
       t_s=st.integers(0, 200))
def test_positions_never_leave_grid(seed, speed, t_s):
    m = make_model(speed, seed=seed, nodes=2)
    for node in range(2):
        x, y = m.position(node, t_s * TICKS_PER_SECOND)
        assert 0.0 <= x <= 500.0
        assert 0.0 <= y <= 500.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 1000), speed=st.sampled_from([1.0, 20.0, 50.0]),
       t_s=st.integers(0, 100), dt_ticks=st.integers(1, TICKS_PER_SECOND))
def test_displacement_bounded_by_speed(seed, speed, t_s, dt_ticks):
    m = make_model(speed, seed=seed)
    t0 = t_s * TICKS_PER_SECOND
    p0 = m.position(0, t0)
    p1 = m.position(0, t0 + dt_ticks)
    moved = distance(p0, p1)
    allowed = speed * dt_ticks / TICKS_PER_SECOND
    # leg durations round to whole ticks, so the effective speed of a leg
    # can exceed the nominal speed by up to half a tick per leg
    assert moved <= allowed * (1 + 1e-3) + 1e-6


def test_position_continuous_across_leg_boundary():
    m = make_model(10.0, seed=3)
    leg = m._next_leg(0)
    before = m.position(0, leg.arrive - 1)
    at = m.position(0, leg.arrive)
    assert distance(before, at) < 10.0 * 2 / TICKS_PER_SECOND + 1e-9
    assert at == leg.target


def test_trace_hash_stable_and_speed_sensitive():
    end = 100 * TICKS_PER_SECOND
    h1 = make_model(20.0, seed=5, nodes=4).trace_hash(end)
    h2 = make_model(20.0, seed=5, nodes=4).trace_hash(end)
    h3 = make_model(30.0, seed=5, nodes=4).trace_hash(end)
    assert h1 == h2
    assert h1 != h3
