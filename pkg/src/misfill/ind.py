"""IND: single-door filling as a pure step function.

``ind_step(vars, snap)`` maps a robot's persistent variables and its Look
snapshot to updated variables and an action. The same skeleton drives
MULTIND (see :mod:`misfill.multind`); only target selection, the WAIT
label and the start-up rule differ.
"""
from __future__ import annotations

from typing import Callable, NamedTuple, Optional

from .robot import (
    CONF,
    CONF2,
    CONF3,
    CONFC,
    DIR,
    MOV,
    OFF,
    ON,
    WAIT,
    Color,
    RobotVars,
    Snapshot,
    State,
    TwoHopPath,
    resolve_predecessor,
)


class ProtocolViolation(RuntimeError):
    """Snapshot inconsistent with the robot's handshake state (simulator bug)."""


class Action(NamedTuple):
    kind: str  # "stay" | "move"
    path: Optional[TwoHopPath] = None

    def __str__(self):
        return "stay" if self.kind == "stay" else f"move:{self.path.one},{self.path.two}"


STAY = Action("stay")


def Move(path: TwoHopPath) -> Action:
    return Action("move", TwoHopPath(*path))


class StepResult(NamedTuple):
    vars: RobotVars
    action: Action


class Choice(NamedTuple):
    """Outcome of target selection: a path, or none and whether to hold instead of giving up."""

    path: Optional[TwoHopPath]
    hold: bool = False


class Rules(NamedTuple):
    find_target: Callable[[RobotVars, Snapshot, bool], Choice]
    wait_color: Callable[[RobotVars], Color]
    announce_first: Callable[[RobotVars, Snapshot], bool]
    foreign_aware: bool


# -- snapshot helpers --------------------------------------------------------

def _slot(snap: Snapshot, path) -> int:
    i = snap.view.walk(0, path)
    if i < 0:
        raise ProtocolViolation(f"relative position {tuple(path)} is not visible")
    return i


def _two_hop_candidates(snap: Snapshot):
    """Yield ``(path, mid_slot, target_slot)`` for every vertex exactly two hops away,
    in lexicographic port order."""
    view = snap.view
    for p1, mid in enumerate(view.port_to[0], start=1):
        if mid < 0:
            continue
        for p2, v in enumerate(view.port_to[mid], start=1):
            if v < 0 or view.dist[0][v] != 2:
                continue
            yield TwoHopPath(p1, p2), mid, v


def is_free_target(snap: Snapshot, v: int) -> bool:
    """``v`` is empty and none of its visible neighbors is occupied.

    Neighbors beyond the visibility radius are assumed empty; that is what
    makes too-small radii unsafe.
    """
    if snap.occupied(v):
        return False
    return not any(y >= 0 and snap.cells[y] is not None for y in snap.view.port_to[v])


def ring_colors(snap: Snapshot, v: int, radius: int) -> list[Color]:
    """Colors of the active robots two hops from ``v`` and within ``radius`` of
    the observer (the observer itself excluded)."""
    dist = snap.view.dist
    return [
        c.color
        for w, c in enumerate(snap.cells)
        if w != 0 and c is not None and c.color != OFF and dist[v][w] == 2 and 0 <= dist[0][w] <= radius
    ]


def two_hop_ring_clear(snap: Snapshot, v: int, radius: int) -> bool:
    """Every vertex two hops from ``v`` and within ``radius`` of the observer is
    empty or holds a Finished robot."""
    return not ring_colors(snap, v, radius)


def select_target(vars: RobotVars, snap: Snapshot, first: bool = False) -> Optional[TwoHopPath]:
    """Lexicographically least two-hop path to a free vertex whose two-hop ring
    (within three hops of the leader) holds no active robot.

    ``first`` drops the ring condition (a fresh robot's first move).
    """
    for path, _mid, v in _two_hop_candidates(snap):
        if not is_free_target(snap, v):
            continue
        if first or two_hop_ring_clear(snap, v, 3):
            return path
    return None


# -- sub-protocols -----------------------------------------------------------

def communicate_substep(vars: RobotVars, snap: Snapshot) -> StepResult:
    """Sender side of the direction hand-off, keyed on the successor's light."""
    t = vars.target
    if t is None:
        raise ProtocolViolation("communicate without a target")
    if not vars.has_successor or vars.back is None:
        return _start_move(vars, snap)
    sc = snap.color_at(_slot(snap, vars.back))
    if sc in (CONF3, ON):
        return StepResult(vars.evolve(color=DIR(t.one)), STAY)
    if sc == CONF:
        return StepResult(vars.evolve(color=CONFC), STAY)
    if sc == CONFC:
        return StepResult(vars.evolve(color=DIR(t.two)), STAY)
    if sc == CONF2:
        return _start_move(vars, snap)
    return StepResult(vars, STAY)


def _start_move(vars: RobotVars, snap: Snapshot) -> StepResult:
    mid = snap.view.walk(0, vars.target[:1])
    end = snap.view.walk(0, vars.target)
    if snap.occupied(mid) or snap.occupied(end):
        # path still blocked in this snapshot; try again next cycle
        return StepResult(vars, STAY)
    return StepResult(vars.evolve(color=MOV), Move(vars.target))


def _points_at_me(snap: Snapshot, pred: int, port: int) -> bool:
    view = snap.view
    if not 1 <= port <= len(view.port_to[pred]):
        return False
    y = view.port_to[pred][port - 1]
    return y >= 0 and view.dist[0][y] == 1


def receive_substep(vars: RobotVars, snap: Snapshot) -> StepResult:
    """Receiver side of the direction hand-off, keyed on own and predecessor's light."""
    if vars.pred is None:
        raise ProtocolViolation("receive without a predecessor")
    p = _slot(snap, vars.pred)
    pc = snap.color_at(p)
    own = vars.color
    if pc is None:
        return StepResult(vars, STAY)
    if own in (CONF3, ON) and vars.next_one is None:
        if pc.kind == "DIR":
            if _points_at_me(snap, p, pc.arg):
                return StepResult(vars.evolve(color=CONF, taking_over=True), STAY)
            return StepResult(vars.evolve(color=CONF, next_one=pc.arg), STAY)
        return StepResult(vars, STAY)
    if own == CONF and pc == CONFC and vars.next_one is not None:
        return StepResult(vars.evolve(color=CONFC), STAY)
    if own == CONFC and pc.kind == "DIR" and vars.next_one is not None:
        return StepResult(vars.evolve(color=CONF2, next_two=pc.arg), STAY)
    return StepResult(vars, STAY)


def packed_state_substep(vars: RobotVars, snap: Snapshot) -> StepResult:
    """Propagate the Packed confirmation from the Door toward the Leader.

    For a waiting Leader whose successor confirmed, the action stays STAY and
    the caller proceeds to target selection.
    """
    if vars.back is None:
        return StepResult(vars, STAY)
    sc = snap.color_at(_slot(snap, vars.back))
    if vars.color == MOV and sc in (ON, CONF3):
        return StepResult(vars.evolve(color=CONF3), STAY)
    return StepResult(vars, STAY)


def leadership_transfer_substep(vars: RobotVars, snap: Snapshot) -> StepResult:
    """Hand leadership back along the chain, or finish when nobody follows."""
    if vars.transferring:
        sc = snap.color_at(_slot(snap, vars.back))
        if sc == CONF:
            return StepResult(_finish(vars), STAY)
        return StepResult(vars, STAY)
    if vars.has_successor and vars.back is not None:
        return StepResult(vars.evolve(color=DIR(vars.back.one), transferring=True), STAY)
    return StepResult(_finish(vars), STAY)


def _finish(vars: RobotVars) -> RobotVars:
    return vars.evolve(state=State.FINISHED, color=OFF, target=None, transferring=False)


# -- the step ------------------------------------------------------------------

def protocol_step(vars: RobotVars, snap: Snapshot, rules: Rules) -> StepResult:
    if vars.state is State.FINISHED:
        return StepResult(vars, STAY)
    if vars.state is State.NONE:
        return _none_branch(vars, snap, rules)
    if vars.state is State.LEADER:
        return _leader_branch(vars, snap, rules)
    return _follower_branch(vars, snap, rules)


def _none_branch(vars, snap, rules):
    pred = resolve_predecessor(snap, vars.door_rank if rules.foreign_aware else None)
    if pred is None:
        if rules.announce_first(vars, snap):
            return StepResult(vars.evolve(state=State.LEADER, color=rules.wait_color(vars)), STAY)
        leader = vars.evolve(state=State.LEADER)
        choice = rules.find_target(leader, snap, True)
        if choice.path is None:
            if choice.hold:
                return StepResult(leader.evolve(color=rules.wait_color(vars)), STAY)
            return StepResult(_finish(leader), STAY)
        leader = leader.evolve(target=choice.path)
        return _start_move(leader, snap)
    if len(pred) < 2:
        # the nearest robot is still between vertices
        return StepResult(vars, STAY)
    follower = vars.evolve(state=State.FOLLOWER, pred=TwoHopPath(*pred))
    return _follower_branch(follower, snap, rules)


def _leader_branch(vars, snap, rules):
    if vars.transferring:
        return leadership_transfer_substep(vars, snap)
    if vars.target is not None:
        return communicate_substep(vars, snap)
    if vars.entry is None:
        # leader still standing on its Door
        choice = rules.find_target(vars, snap, True)
        if choice.path is None:
            if choice.hold:
                return StepResult(vars, STAY)
            return StepResult(_finish(vars), STAY)
        return _start_move(vars.evolve(target=choice.path), snap)
    sc = snap.color_at(_slot(snap, vars.back))
    if sc != CONF3:
        return StepResult(vars, STAY)
    choice = rules.find_target(vars, snap, False)
    if choice.path is not None:
        return communicate_substep(vars.evolve(target=choice.path), snap)
    if choice.hold:
        return StepResult(vars, STAY)
    return leadership_transfer_substep(vars, snap)


def _follower_branch(vars, snap, rules):
    p = _slot(snap, vars.pred)
    pc = snap.color_at(p)
    if vars.taking_over:
        if pc == OFF:
            return StepResult(
                vars.evolve(state=State.LEADER, color=rules.wait_color(vars), taking_over=False, pred=None),
                STAY,
            )
        return StepResult(vars, STAY)
    if vars.color == MOV and vars.target is None:
        return packed_state_substep(vars, snap)
    if vars.next_target is None:
        if vars.color == ON and pc == rules.wait_color(vars):
            return StepResult(vars.evolve(color=CONF3), STAY)
        return receive_substep(vars, snap)
    if pc is not None and vars.target is None:
        # predecessor has not left yet
        return StepResult(vars, STAY)
    if vars.target is None:
        vars = vars.evolve(target=vars.pred)
    return communicate_substep(vars, snap)


def arrive(vars: RobotVars, path: TwoHopPath, back: TwoHopPath) -> RobotVars:
    """Variables after a completed two-hop move along ``path``."""
    vars = vars.evolve(entry=TwoHopPath(*path), back=back, has_successor=True, target=None)
    if vars.state is State.LEADER:
        return vars.evolve(color=WAIT(vars.door_rank))
    return vars.evolve(pred=vars.next_target, next_one=None, next_two=None)


def _ind_find(vars: RobotVars, snap: Snapshot, first: bool) -> Choice:
    return Choice(select_target(vars, snap, first))


IND_RULES = Rules(
    find_target=_ind_find,
    wait_color=lambda vars: WAIT(vars.door_rank),
    announce_first=lambda vars, snap: False,
    foreign_aware=False,
)


def ind_step(vars: RobotVars, snap: Snapshot) -> StepResult:
    """One Compute of IND."""
    return protocol_step(vars, snap, IND_RULES)
