import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misfill.graph import attach_doors, ball, build_graph, random_connected_graph
from misfill.robot import (
    CONF3,
    MOV,
    OFF,
    ON,
    DIR,
    WAIT,
    Cell,
    Color,
    RobotVars,
    TwoHopPath,
    dominates,
    make_snapshot,
    palette,
    resolve_predecessor,
    reverse_path,
    successor_position,
)


def path_graph(n):
    return build_graph([(i, 1 if i == 0 else 2, i + 1, 1) for i in range(n - 1)], n=n)


@pytest.mark.parametrize("delta", [1, 2, 5, 9])
def test_palette_size_single_door(delta):
    assert len(set(palette(delta))) == delta + 8


@pytest.mark.parametrize("delta, k", [(2, 2), (3, 4), (6, 3)])
def test_palette_size_multi_door(delta, k):
    assert len(set(palette(delta, k))) == delta + k + 7


@pytest.mark.parametrize("c", [ON, OFF, MOV, CONF3, DIR(3), WAIT(2)])
def test_color_text_round_trip(c):
    assert Color.parse(str(c)) == c


def test_color_parse_rejects_unknown():
    with pytest.raises(ValueError):
        Color.parse("BLUE")


def test_dominates_examples():
    assert dominates(WAIT(1), WAIT(2))
    assert not dominates(WAIT(2), WAIT(2))
    assert not dominates(MOV, WAIT(1))


@given(st.integers(1, 9), st.integers(1, 9), st.integers(1, 9))
def test_dominates_is_strict_order(a, b, c):
    x, y, z = WAIT(a), WAIT(b), WAIT(c)
    assert not dominates(x, x)
    assert not (dominates(x, y) and dominates(y, x))
    if dominates(x, y) and dominates(y, z):
        assert dominates(x, z)


def test_snapshot_single_vertex():
    g = build_graph([], n=1)
    snap = make_snapshot(g, {0: (ON, False)}, 0, 3)
    assert len(snap.cells) == 1 and snap.robots() == []
    assert snap.self_color == ON


def test_snapshot_radius_zero_sees_self_only():
    g = path_graph(4)
    snap = make_snapshot(g, {0: (ON, False), 1: (ON, False)}, 0, 0)
    assert snap.view.paths == ((),)


def test_snapshot_sees_robots_on_both_sides():
    # a - b - c - d - e with robots at a, c, e; the middle one looks
    g = path_graph(5)
    config = {4: Cell(WAIT(1)), 2: Cell(CONF3), 0: Cell(ON)}
    snap = make_snapshot(g, config, 2, 3)
    seen = {snap.view.paths[i]: snap.cells[i].color for i in snap.robots()}
    assert seen == {(1, 1): ON, (2, 2): WAIT(1)}
    assert snap.local_ports()[(1,)] == 2


def test_snapshot_reports_transit():
    g = path_graph(3)
    snap = make_snapshot(g, {1: Cell(MOV, True), 0: Cell(ON)}, 0, 2)
    assert snap.at((1,)) == Cell(MOV, True)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 20), st.integers(2, 5), st.integers(0, 10**6), st.integers(1, 4))
def test_snapshot_locality(n, max_deg, seed, z):
    g = random_connected_graph(n, max_deg, seed)
    rng = random.Random(seed)
    here = rng.randrange(n)
    inside = ball(g, here, z)
    outside = [v for v in range(n) if v not in inside]
    config = {here: Cell(ON)}
    for v in rng.sample(range(n), n // 2):
        config.setdefault(v, Cell(rng.choice([ON, OFF, MOV])))
    base = make_snapshot(g, config, here, z)
    assert {g_v for g_v in base.view._vertices} == inside
    for v in outside:
        config[v] = None if v in config else Cell(CONF3)
    config = {v: c for v, c in config.items() if c is not None}
    assert make_snapshot(g, config, here, z) == base


def test_resolve_predecessor_examples():
    g = path_graph(5)
    assert resolve_predecessor(make_snapshot(g, {0: Cell(ON)}, 0, 3)) is None
    two_away = make_snapshot(g, {0: Cell(ON), 2: Cell(WAIT(1))}, 0, 3)
    assert resolve_predecessor(two_away) == (1, 2)
    both = make_snapshot(g, {2: Cell(ON), 0: Cell(WAIT(1)), 3: Cell(MOV, True)}, 2, 3)
    assert resolve_predecessor(both) == (2,)


def test_resolve_predecessor_skips_finished_and_foreign_leaders():
    g = path_graph(5)
    snap = make_snapshot(g, {0: Cell(ON), 1: Cell(OFF), 2: Cell(WAIT(2))}, 0, 3)
    assert resolve_predecessor(snap) == (1, 2)
    assert resolve_predecessor(snap, rank=1) is None
    assert resolve_predecessor(snap, rank=2) == (1, 2)


def test_successor_position_examples():
    fresh = RobotVars()
    assert successor_position(fresh) is None
    moved = RobotVars(entry=TwoHopPath(1, 2), back=TwoHopPath(2, 1), has_successor=True)
    assert successor_position(moved) == TwoHopPath(2, 1)
    assert successor_position(moved.evolve(has_successor=False)) is None


def test_reverse_path_on_door_path():
    g, doors = attach_doors(build_graph([], n=1), [0])
    d = doors.doors[0]
    end, back = reverse_path(g, d.door, TwoHopPath(1, 1))
    assert end == d.anchor
    # anchor's only edge is port 1, and the buffer reaches the door by port 2
    assert back == TwoHopPath(1, 2)


@settings(max_examples=80, deadline=None)
@given(st.integers(3, 20), st.integers(2, 5), st.integers(0, 10**6))
def test_reversing_a_move_returns_home(n, max_deg, seed):
    g = random_connected_graph(n, max_deg, seed)
    rng = random.Random(seed)
    start = rng.randrange(n)
    p1 = rng.randint(1, g.degree(start))
    mid, _ = g.follow(start, p1)
    p2 = rng.randint(1, g.degree(mid))
    end, back = reverse_path(g, start, TwoHopPath(p1, p2))
    again, _ = reverse_path(g, end, back)
    assert again == start
