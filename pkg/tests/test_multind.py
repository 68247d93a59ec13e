from misfill.graph import attach_doors, build_graph
from misfill.ind import STAY, Move, arrive
from misfill.multind import (
    busy_nearby,
    cuts_chain,
    domination_view,
    local_path_set,
    multind_find_target,
    multind_step,
)
from misfill.robot import CONF3, DIR, MOV, OFF, ON, WAIT, Cell, RobotVars, State, TwoHopPath, make_snapshot


def path_graph(n):
    return build_graph([(i, 1 if i == 0 else 2, i + 1, 1) for i in range(n - 1)], n=n)


def snap_of(g, config, here, z=5):
    return make_snapshot(g, {v: c if isinstance(c, Cell) else Cell(c) for v, c in config.items()}, here, z)


def leader(rank, **kw):
    return RobotVars(state=State.LEADER, color=WAIT(rank), door_rank=rank, **kw)


def test_fresh_robot_at_second_door_leads_with_its_rank():
    g, doors = attach_doors(build_graph([], n=1), [0])
    res = multind_step(RobotVars(door_rank=2), snap_of(g, {2: ON}, 2))
    assert res.vars.state is State.LEADER and res.vars.color == MOV
    assert res.action == Move(TwoHopPath(1, 1))
    after = arrive(res.vars, TwoHopPath(1, 1), TwoHopPath(1, 2))
    assert after.color == WAIT(2)


def test_fresh_robot_behind_own_leader_confirms():
    g, _ = attach_doors(build_graph([], n=1), [0])
    res = multind_step(RobotVars(door_rank=1), snap_of(g, {2: ON, 0: WAIT(1)}, 2))
    assert res.vars.state is State.FOLLOWER and res.vars.color == CONF3


def test_fresh_robot_ignores_other_doors_leader_and_announces():
    g, _ = attach_doors(build_graph([], n=1), [0])
    res = multind_step(RobotVars(door_rank=1), snap_of(g, {2: ON, 0: WAIT(2)}, 2))
    assert res.vars.state is State.LEADER and res.vars.color == WAIT(1)
    assert res.action == STAY


def test_finished_stays():
    g = path_graph(3)
    done = RobotVars(state=State.FINISHED, color=OFF, door_rank=2)
    assert multind_step(done, snap_of(g, {0: OFF}, 0)) == (done, STAY)


def test_domination_view_splits_by_rank():
    g = path_graph(7)
    snap = snap_of(g, {3: WAIT(2), 0: WAIT(1), 6: WAIT(3), 5: CONF3}, 3)
    view = domination_view(leader(2), snap)
    assert view.dominators == {(1, 1, 1)}
    assert view.dominated == {(2, 2, 2)}


def flanked_graph():
    # leader at 0; 0 - 1 - 2 is the only two-hop move; 1 also touches 3 and 4
    return build_graph([(0, 1, 1, 1), (1, 2, 2, 1), (1, 3, 3, 1), (1, 4, 4, 1)])


def test_move_through_another_chain_rejected():
    g = flanked_graph()
    snap = snap_of(g, {0: WAIT(1), 3: OFF, 4: WAIT(2)}, 0)
    assert cuts_chain(snap, snap.view.walk(0, (1,)))
    assert multind_find_target(leader(1), snap).path is None


def test_move_past_finished_robots_allowed():
    g = flanked_graph()
    snap = snap_of(g, {0: WAIT(1), 3: OFF, 4: OFF}, 0)
    assert not cuts_chain(snap, snap.view.walk(0, (1,)))
    assert multind_find_target(leader(1), snap).path == TwoHopPath(1, 2)


def dominated_setup():
    # 0 - 1 - 2 - 3 - 4 - 5 - 6 - 7: dominated leader at 2 with its successor at 0,
    # dominator at 7; the only free two-hop vertex (4) lies toward the dominator
    g = path_graph(8)
    snap = snap_of(g, {2: WAIT(2), 0: CONF3, 7: WAIT(1)}, 2)
    vars = leader(2, entry=TwoHopPath(2, 2), back=TwoHopPath(1, 1), has_successor=True)
    return g, snap, vars


def test_dominated_leader_avoids_paths_to_dominator():
    g, snap, vars = dominated_setup()
    d = snap.view.walk(0, (2, 2, 2, 2, 2))
    assert snap.view.walk(0, (2, 2)) in local_path_set(snap, 0, d, 5)
    assert multind_find_target(vars, snap).path is None


def test_dominated_leader_hands_over_when_not_holding():
    _, snap, vars = dominated_setup()
    res = multind_step(vars, snap, dominated_hold=False)
    assert res.vars.transferring and res.vars.color == DIR(1)


def test_dominated_leader_holds_by_default():
    _, snap, vars = dominated_setup()
    assert multind_step(vars, snap) == (vars, STAY)


def test_lone_leader_reduces_to_single_door_choice():
    g = path_graph(5)
    vars = leader(1, entry=TwoHopPath(2, 2), back=TwoHopPath(1, 1), has_successor=True)
    snap = snap_of(g, {2: WAIT(1), 0: CONF3}, 2)
    assert multind_find_target(vars, snap).path == TwoHopPath(2, 2)


def test_weaker_leader_does_not_block_ring():
    # target 2 is two hops from the weaker leader at 4; it does not hold us back
    g = path_graph(5)
    snap = snap_of(g, {0: WAIT(1), 4: WAIT(2)}, 0)
    assert multind_find_target(leader(1, entry=TwoHopPath(1, 1)), snap).path == TwoHopPath(1, 2)


def test_stronger_leader_in_ring_means_wait():
    g = path_graph(5)
    snap = snap_of(g, {0: WAIT(2), 4: WAIT(1)}, 0)
    choice = multind_find_target(leader(2, entry=TwoHopPath(1, 1)), snap)
    assert choice.path is None and choice.hold


def test_busy_robot_near_target():
    g = path_graph(7)
    snap = snap_of(g, {0: WAIT(1), 5: DIR(1)}, 0)
    assert busy_nearby(snap, snap.view.walk(0, (1, 2)))
    choice = multind_find_target(leader(1, entry=TwoHopPath(1, 1)), snap)
    assert choice.path is None and choice.hold


def test_fresh_leader_waits_for_unranked_robot():
    g = path_graph(7)
    snap = snap_of(g, {0: WAIT(2), 5: ON}, 0)
    choice = multind_find_target(leader(2), snap, first=True)
    assert choice.path is None and choice.hold
