"""Ground-truth oracles and trace monitors.

The monitors read the omniscient trace (robot ids, vertex ids); robots never
see any of this.
"""
from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import asdict, dataclass
from typing import Optional

from .graph import DoorAttachment, PortGraph


class GraphTooLarge(ValueError):
    pass


# -- independent sets ----------------------------------------------------------

def is_independent(g: PortGraph, s) -> bool:
    s = set(s)
    return not any(u in s for v in s for u in g.neighbors(v))


def is_maximal_independent(g: PortGraph, s) -> bool:
    s = set(s)
    if not is_independent(g, s):
        return False
    return all(v in s or any(u in s for u in g.neighbors(v)) for v in range(g.n))


def enumerate_mis(g: PortGraph, limit: int = 20) -> set[frozenset]:
    """All maximal independent sets, by Bron-Kerbosch on the complement graph."""
    if g.n > limit:
        raise GraphTooLarge(f"n={g.n} exceeds enumeration limit {limit}")
    nbrs = [set(g.neighbors(v)) for v in range(g.n)]
    out: set[frozenset] = set()

    # independent sets of G are cliques of the complement
    def expand(r: set, p: set, x: set):
        if not p and not x:
            out.add(frozenset(r))
            return
        pivot = max(p | x, key=lambda u: len(p - nbrs[u] - {u}))
        for v in list(p - (set(range(g.n)) - nbrs[pivot] - {pivot})):
            comp = set(range(g.n)) - nbrs[v] - {v}
            expand(r | {v}, p & comp, x & comp)
            p.discard(v)
            x.add(v)

    expand(set(), set(range(g.n)), set())
    return out


# -- epochs ----------------------------------------------------------------------

def _robot_cycles(trace):
    spawn, finish, cycles = {}, {}, {}
    open_look = {}
    moving = {}
    for ev in trace:
        r = ev.robot
        if ev.kind == "Spawn":
            spawn[r] = ev.tick
        elif ev.kind == "Look":
            open_look[r] = ev.tick
        elif ev.kind == "ComputeDone":
            if ev.detail.get("action", "stay") == "stay":
                cycles.setdefault(r, []).append((open_look.pop(r, ev.tick), ev.tick))
            else:
                moving[r] = open_look.pop(r, ev.tick)
        elif ev.kind == "MoveEnd":
            cycles.setdefault(r, []).append((moving.pop(r, ev.tick), ev.tick))
        elif ev.kind == "Finish":
            finish[r] = ev.tick
    return spawn, finish, cycles


def epoch_boundaries(trace) -> list[int]:
    """Ticks closing each complete epoch under greedy segmentation.

    A segment starting at ``s`` closes at the first tick by which every robot
    alive (spawned, not Finished) throughout it has completed a whole cycle
    that began inside the segment.
    """
    spawn, finish, cycles = _robot_cycles(trace)
    if not cycles:
        return []
    ends_sorted = {r: sorted(c) for r, c in cycles.items()}
    inf = float("inf")
    last = max(e for c in cycles.values() for _, e in c)
    s = min(spawn.values(), default=0)
    bounds = []
    while s <= last:
        need = -inf
        any_done = inf
        for r, t0 in spawn.items():
            f = finish.get(r, inf)
            first = min((e for b, e in ends_sorted.get(r, ()) if b >= s), default=inf)
            any_done = min(any_done, first)
            if t0 > s or f < s:
                continue
            need = max(need, min(first, f))
        e = max(need, any_done)
        if e == inf:
            break
        e = int(e)
        bounds.append(e)
        s = e + 1
    return bounds


def compute_epochs(trace) -> int:
    """Number of epochs in ``trace``, counting a trailing partial epoch."""
    bounds = epoch_boundaries(trace)
    _, _, cycles = _robot_cycles(trace)
    tail = bounds[-1] if bounds else -1
    partial = any(e > tail for c in cycles.values() for _, e in c)
    return len(bounds) + (1 if partial else 0)


def epoch_bound(m: int) -> int:
    """Analytic IND bound: sum of 7i for i=1..m plus 4m."""
    return 7 * m * (m + 1) // 2 + 4 * m


# -- trace monitors --------------------------------------------------------------

@dataclass
class CheckReport:
    name: str
    passed: bool
    first_violation: Optional[tuple] = None
    evaluated: bool = True
    hard: bool = True
    note: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))


class _Replayer:
    """Rebuilds the omniscient configuration while walking a trace."""

    def __init__(self, g: PortGraph, doors: DoorAttachment):
        self.g = g
        self.doors = doors
        self.pos: dict[int, int] = {}
        self.color: dict[int, str] = {}
        self.state: dict[int, str] = {}
        self.rank: dict[int, int] = {}
        self.pred: dict[int, Optional[int]] = {}
        self.transit: set[int] = set()
        self.moves: dict[int, int] = {}

    def feed(self, ev):
        r = ev.robot
        if ev.kind == "Spawn":
            self.pos[r] = ev.vertex
            self.color[r] = ev.detail.get("color", "ON")
            self.state[r] = "None"
            self.rank[r] = ev.detail.get("rank", 1)
        elif ev.kind == "ColorChange":
            self.color[r] = ev.detail["to"]
        elif ev.kind == "StateChange":
            self.state[r] = ev.detail["to"]
            if ev.detail["to"] == "Follower":
                self.pred[r] = ev.detail.get("pred")
        elif ev.kind == "MoveStart":
            self.transit.add(r)
        elif ev.kind == "Hop":
            self.pos[r] = ev.vertex
        elif ev.kind == "MoveEnd":
            self.pos[r] = ev.vertex
            self.transit.discard(r)
            self.moves[r] = self.moves.get(r, 0) + 1

    def occupied(self):
        return set(self.pos.values())

    def chain(self, leader: int) -> list[int]:
        """Leader followed by its followers, predecessor links from the trace."""
        out = [leader]
        seen = {leader}
        while True:
            nxt = [r for r, p in self.pred.items()
                   if p == out[-1] and r not in seen and self.state.get(r) == "Follower"]
            if not nxt:
                return out
            out.append(nxt[0])
            seen.add(nxt[0])

    def door_of(self, r: int) -> int:
        return self.doors.doors[self.rank[r] - 1].door

    def terminated(self) -> bool:
        if any(s != "Finished" for s in self.state.values()):
            return False
        occ = self.occupied()
        return all(d in occ for d in self.doors.door_vertices)


def check_trace(trace, g: PortGraph, doors: DoorAttachment, protocol: str = "IND", ring_radius: int = 3) -> list[CheckReport]:
    """Run every monitor over ``trace``; one report per monitor."""
    trace = list(trace)
    meta = trace[0].detail if trace and trace[0].kind == "Meta" else {}
    sched = meta.get("sched", "FSYNC")
    latency_hard = sched == "FSYNC"
    st = _Replayer(g, doors)
    viol: dict[str, Optional[tuple]] = {}

    def fail(name, tick, msg):
        viol.setdefault(name, (tick, msg))

    dist = g.distance
    transfer_start: dict[int, int] = {}  # old leader -> tick of pointing DIR
    transfers = []  # (t0, t1)
    leader_moves = []  # (leader, t_end, chain members, chain size)
    move_done = []  # (robot, tick) for follower MoveEnd
    repacks = []  # (t_end, t_next_decision, chain size)
    pending_repack: dict[int, tuple] = {}

    def end_of_tick(tick):
        occ = list(st.pos.values())
        if len(occ) != len(set(occ)):
            fail("no_collision", tick, "two robots on one vertex")
        leaders = [r for r, s in st.state.items() if s == "Leader"]
        if protocol == "IND" and len(leaders) > 1:
            fail("single_leader", tick, f"leaders {sorted(leaders)}")
        off = [st.pos[r] for r, s in st.state.items() if s == "Finished"]
        off_set = set(off)
        for v in off:
            if any(u in off_set for u in g.neighbors(v)):
                fail("no_adjacent_finished", tick, f"Finished robots adjacent at vertex {v}")
                break

    current = None
    for ev in trace:
        if ev.kind == "Meta":
            continue
        if current is not None and ev.tick != current:
            end_of_tick(current)
        current = ev.tick
        r = ev.robot
        if ev.kind == "Collision":
            fail("no_collision", ev.tick, f"robot {r} collided at {ev.vertex}")
        if ev.kind == "MoveStart":
            mid, target = ev.detail["mid"], ev.detail["target"]
            src = st.pos[r]
            occupied = {v: q for q, v in st.pos.items() if q != r}
            flank = [u for u in g.neighbors(mid) if u in occupied]
            if protocol == "MULTIND" and st.state.get(r) == "Leader":
                if len(flank) >= 2 and any(st.color[occupied[u]] != "OFF" for u in flank):
                    fail("no_chain_cross", ev.tick, f"robot {r} cuts through {flank} at {mid}")
            if st.state.get(r) == "Leader":
                chain = st.chain(r)
                members = chain[1:]
                if st.moves.get(r, 0) >= 1:
                    problem = _packed_problem(st, chain, g)
                    if problem:
                        fail("packed_before_move", ev.tick, f"leader {r}: {problem}")
                for q in members:
                    w = st.pos[q]
                    if dist(target, w) == 2 and dist(src, w) <= ring_radius:
                        fail("no_self_cross", ev.tick, f"leader {r} target {target} two hops from chain robot {q}")
        st.feed(ev)
        if ev.kind == "ColorChange" and ev.detail.get("transfer"):
            transfer_start[r] = ev.tick
        if ev.kind == "StateChange" and ev.detail["to"] == "Leader" and ev.detail["from"] == "Follower":
            p = st.pred.get(r)
            if p in transfer_start:
                transfers.append((transfer_start.pop(p), ev.tick))
        if ev.kind == "MoveEnd":
            if st.state.get(r) == "Leader":
                chain = st.chain(r)
                size = _chain_size(st, chain)
                leader_moves.append((r, ev.tick, chain[1:], size))
                pending_repack[r] = (ev.tick, size)
            else:
                move_done.append((r, ev.tick))
        if ev.kind in ("ColorChange", "Finish") and r in pending_repack and st.state.get(r) in ("Leader", "Finished"):
            if ev.kind == "Finish" or not ev.detail.get("to", "").startswith("WAIT"):
                t0, size = pending_repack.pop(r)
                repacks.append((t0, ev.tick, size))
    if current is not None:
        end_of_tick(current)

    reports = []

    def report(name, evaluated=True, hard=True, note=""):
        v = viol.get(name)
        reports.append(CheckReport(name, v is None, v, evaluated, hard, note))

    report("no_collision")
    if protocol == "IND":
        report("single_leader")
    report("no_adjacent_finished")

    terminated = st.terminated()
    final = st.occupied()
    reports.append(CheckReport("termination", terminated, None if terminated else (current, "run stopped before every robot finished")))
    if terminated:
        if not is_maximal_independent(g, final):
            kind = "not independent" if not is_independent(g, final) else "not maximal"
            fail("final_mis", current, f"final set {sorted(final)} is {kind}")
        report("final_mis")
    else:
        reports.append(CheckReport("final_mis", True, None, evaluated=False, note="trace did not terminate"))

    report("packed_before_move")
    report("no_self_cross")
    if protocol == "MULTIND":
        report("no_chain_cross")

    bounds = epoch_boundaries(trace)

    def span(t0, t1):
        return bisect_left(bounds, t1) - bisect_left(bounds, t0) + 1

    m = len(st.pos)
    epochs = compute_epochs(trace)
    if protocol == "IND":
        if terminated and epochs > epoch_bound(m):
            fail("epoch_bound", current, f"{epochs} epochs > bound {epoch_bound(m)} for m={m}")
        report("epoch_bound", evaluated=terminated, note=f"epochs={epochs} m={m} bound={epoch_bound(m)}")

    for t0, t1 in transfers:
        if span(t0, t1) > 4:
            fail("leadership_latency", t0, f"transfer took {span(t0, t1)} epochs")
            break
    worst = max((span(a, b) for a, b in transfers), default=0)
    report("leadership_latency", hard=latency_hard and protocol == "IND",
           note=f"transfers={len(transfers)} max_epochs={worst}")

    ends = {}
    for q, t in move_done:
        ends.setdefault(q, []).append(t)
    for leader, t0, members, size in leader_moves:
        for q in members:
            later = [t for t in ends.get(q, []) if t >= t0]
            if later and span(t0, later[0]) > size:
                fail("move_latency", t0, f"robot {q} followed after {span(t0, later[0])} epochs > {size}")
                break
    report("move_latency", hard=False, note="advisory: per-link hand-offs are not counted by the bound")

    for t0, t1, size in repacks:
        if span(t0, t1) > 7 * size:
            fail("repack_latency", t0, f"repacking took {span(t0, t1)} epochs > 7*{size}")
            break
    worst = max((span(a, b) / size for a, b, size in repacks), default=0.0)
    report("repack_latency", hard=latency_hard and protocol == "IND",
           note=f"repacks={len(repacks)} max_epochs_per_robot={worst:.2f}")
    return reports


def _chain_size(st: _Replayer, chain: list[int]) -> int:
    door = st.door_of(chain[0])
    occ = {v: r for r, v in st.pos.items()}
    extra = 0 if any(st.pos[q] == door for q in chain) or door not in occ else 1
    return len(chain) + extra


def _packed_problem(st: _Replayer, chain: list[int], g: PortGraph) -> Optional[str]:
    door = st.door_of(chain[0])
    for q in chain:
        if q in st.transit and q != chain[0]:
            return f"robot {q} in transit"
    for a, b in zip(chain, chain[1:]):
        if g.distance(st.pos[a], st.pos[b]) != 2:
            return f"robots {a},{b} not two hops apart"
    tail = st.pos[chain[-1]]
    if tail == door:
        return None
    occ = {v: r for r, v in st.pos.items()}
    if g.distance(tail, door) == 2 and door in occ:
        return None
    return f"chain tail {chain[-1]} at {tail} does not reach the Door"


def hard_failures(reports) -> list[CheckReport]:
    return [r for r in reports if r.evaluated and r.hard and not r.passed]
