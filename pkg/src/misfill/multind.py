"""MULTIND: filling from several ranked Doors.

Leaders compare WAIT ranks (lower door index wins). A dominated leader keeps
off every short path toward its dominator; every leader refuses a target
whose intermediate vertex would cut through another chain.
"""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

from .ind import (
    Choice,
    Rules,
    StepResult,
    _two_hop_candidates,
    is_free_target,
    protocol_step,
    ring_colors,
)
from .robot import OFF, ON, WAIT, Color, RobotVars, Snapshot, TwoHopPath

# colors shown by a robot that has a move pending or underway
_BUSY_KINDS = frozenset({"DIR", "CONF", "CONFC", "CONF2", "MOV"})
# ring occupants that are bound to leave
_PASSING_KINDS = _BUSY_KINDS | {"WAIT"}


class DominationView(NamedTuple):
    dominators: frozenset  # relative positions of stronger WAIT leaders
    dominated: frozenset  # relative positions of weaker WAIT leaders


def domination_view(vars: RobotVars, snap: Snapshot) -> DominationView:
    mine = vars.door_rank
    up, down = set(), set()
    for i in snap.robots():
        c = snap.cells[i].color
        if c.kind != "WAIT" or c.arg == mine:
            continue
        (up if c.arg < mine else down).add(snap.view.paths[i])
    return DominationView(frozenset(up), frozenset(down))


def local_path_set(snap: Snapshot, a: int, b: int, k: int) -> set[int]:
    """Slots on simple ``a``-``b`` paths of length <= ``k`` inside the visible ball."""
    view = snap.view
    dist_b = view.dist[b]
    out: set[int] = set()
    stack = [a]

    def dfs(x: int, length: int):
        if x == b:
            out.update(stack)
            return
        for y in view.port_to[x]:
            if y < 0 or y in stack or dist_b[y] < 0 or length + 1 + dist_b[y] > k:
                continue
            stack.append(y)
            dfs(y, length + 1)
            stack.pop()

    if 0 <= dist_b[a] <= k:
        dfs(a, 0)
    return out


def cuts_chain(snap: Snapshot, mid: int) -> bool:
    """Intermediate vertex has two or more occupied neighbors besides the mover,
    at least one of them active."""
    occ = [y for y in snap.view.port_to[mid] if y > 0 and snap.cells[y] is not None]
    return len(occ) >= 2 and any(snap.cells[y].color != OFF for y in occ)


def busy_nearby(snap: Snapshot, v: int, radius: int = 3) -> bool:
    """Some other robot within ``radius`` of ``v`` is mid-handshake or moving."""
    dist = snap.view.dist[v]
    for w in snap.robots():
        if 0 <= dist[w] <= radius and snap.cells[w].color.kind in _BUSY_KINDS:
            return True
    return False


def multind_find_target(
    vars: RobotVars,
    snap: Snapshot,
    first: bool = False,
    ring_radius: int = 3,
    dominated_hold: bool = True,
) -> Choice:
    """Pick a two-hop target for a leader of door ``vars.door_rank``.

    Returns ``Choice(path)``, or ``Choice(None, hold)`` where ``hold`` says the
    only obstacles are transient (a dominator in view, a busy robot nearby)
    and the leader should wait rather than hand over.
    """
    view = snap.view
    if first and any(snap.cells[i].color == ON for i in snap.robots()):
        # a fresh robot in view has not shown its rank yet
        return Choice(None, hold=True)
    dom = domination_view(vars, snap)
    dominators = [view.slot[p] for p in dom.dominators]
    banned: set[int] = set()
    for d in dominators:
        banned |= local_path_set(snap, 0, d, 5)
    transient = False
    rank = vars.door_rank

    for path, mid, v in _two_hop_candidates(snap):
        if not is_free_target(snap, v):
            continue
        if not first:
            # weaker leaders yield to us; stronger leaders and robots of other
            # chains that are mid-handshake will move on; anything else may be
            # our own chain and blocks for good
            ring = [c for c in ring_colors(snap, v, ring_radius) if not (c.kind == "WAIT" and c.arg > rank)]
            if any(c.kind not in _PASSING_KINDS for c in ring):
                continue
            if ring:
                transient = True
                continue
        if cuts_chain(snap, mid):
            continue
        if busy_nearby(snap, v) or busy_nearby(snap, mid):
            transient = True
            continue
        if dominators and (
            v in banned
            or any(view.dist[v][d] < 4 or view.dist[mid][d] < 4 for d in dominators)
        ):
            transient = True
            continue
        return Choice(path)
    return Choice(None, hold=transient and (dominated_hold or not dominators))


def _announce_first(vars: RobotVars, snap: Snapshot) -> bool:
    # a fresh robot with company in view shows its WAIT rank before moving,
    # so that simultaneous first moves are ranked
    return any(snap.cells[i].color != OFF for i in snap.robots())


@lru_cache(maxsize=None)
def multind_rules(ring_radius: int = 3, dominated_hold: bool = True) -> Rules:
    def find(vars, snap, first):
        return multind_find_target(vars, snap, first, ring_radius, dominated_hold)

    return Rules(
        find_target=find,
        wait_color=lambda vars: WAIT(vars.door_rank),
        announce_first=_announce_first,
        foreign_aware=True,
    )


def multind_step(vars: RobotVars, snap: Snapshot, ring_radius: int = 3, dominated_hold: bool = True) -> StepResult:
    """One Compute of MULTIND."""
    return protocol_step(vars, snap, multind_rules(ring_radius, dominated_hold))
