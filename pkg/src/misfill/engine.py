"""Discrete-event execution of Look-Compute-Move cycles.

FSYNC and SSYNC run in rounds (one tick each; a whole cycle is atomic and
snapshots are taken against the round-start configuration). ASYNC splits a
cycle into Look, Compute, first hop and second hop, separated by
adversarial integer delays in ``[1, max_delay]``.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import NamedTuple, Optional

from .graph import DoorAttachment, PortGraph
from .ind import ProtocolViolation, arrive, ind_step
from .multind import multind_step
from .robot import MOV, ON, Cell, RobotVars, State, TwoHopPath, make_snapshot, reverse_path


class SimulationError(RuntimeError):
    pass


class ReplayDivergence(SimulationError):
    def __init__(self, index, expected, got):
        super().__init__(f"trace diverges at event {index}: expected {expected}, got {got}")
        self.index = index
        self.expected = expected
        self.got = got


@dataclass(frozen=True)
class SchedulerPolicy:
    """Adversary description.

    ``activation`` is ``"random"``, ``"roundrobin"`` or ``"scripted"``.
    A script is a list of activation sets (robot ids) per round for
    FSYNC/SSYNC, or a dict ``robot id -> list of delays`` for ASYNC.
    """

    kind: str = "FSYNC"
    activation: str = "random"
    seed: int = 0
    script: object = None
    fairness_bound: int = 8
    p_active: float = 0.5

    def __post_init__(self):
        if self.kind not in ("FSYNC", "SSYNC", "ASYNC"):
            raise ValueError(f"unknown scheduler kind {self.kind!r}")
        if self.activation not in ("random", "roundrobin", "scripted"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.fairness_bound < 1:
            raise ValueError("fairness_bound must be finite and >= 1")


@dataclass(frozen=True)
class SimulationConfig:
    protocol: str = "IND"
    visibility: Optional[int] = None  # defaults: 3 for IND, 5 for MULTIND
    max_ticks: Optional[int] = None  # default 64 * (n^2 + n)
    max_delay: int = 5
    ring_radius: int = 3  # MULTIND two-hop ring check radius
    dominated_hold: bool = True  # MULTIND: a dominated leader waits instead of handing over

    def __post_init__(self):
        if self.protocol not in ("IND", "MULTIND"):
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.visibility is not None and self.visibility < 1:
            raise ValueError("visibility must be >= 1")
        if self.max_ticks is not None and self.max_ticks < 1:
            raise ValueError("max_ticks must be >= 1")
        if self.max_delay < 1:
            raise ValueError("max_delay must be >= 1")

    @property
    def z(self) -> int:
        if self.visibility is not None:
            return self.visibility
        return 3 if self.protocol == "IND" else 5

    def step_fn(self):
        if self.protocol == "IND":
            return ind_step
        return partial(multind_step, ring_radius=self.ring_radius, dominated_hold=self.dominated_hold)


class TraceEvent(NamedTuple):
    tick: int
    robot: int
    kind: str
    vertex: int
    detail: dict

    def to_json(self) -> str:
        return json.dumps(
            {"tick": self.tick, "robot": self.robot, "kind": self.kind, "vertex": self.vertex, "detail": self.detail},
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "TraceEvent":
        d = json.loads(line)
        return cls(d["tick"], d["robot"], d["kind"], d["vertex"], d["detail"])


@dataclass
class Outcome:
    terminated: bool
    final_occupied: set
    m: int
    epochs: int
    collision_count: int
    trace: list
    ticks: int = 0
    reason: str = ""


@dataclass
class _Robot:
    rid: int
    vertex: int
    vars: RobotVars
    in_transit: bool = False
    # ASYNC bookkeeping
    phase: str = "idle"
    next_time: int = 0
    pending: object = None
    move_path: Optional[TwoHopPath] = None
    move_src: int = -1
    move_mid: int = -1
    move_dst: int = -1
    idle_rounds: int = 0
    delays: list = field(default_factory=list)


def snapshot_digest(snap) -> str:
    """Short stable fingerprint of everything a snapshot shows."""
    cells = tuple(None if c is None else (str(c.color), c.in_transit) for c in snap.cells)
    text = repr((snap.view.paths, snap.view.port_to, cells))
    return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


class _Sim:
    def __init__(self, g: PortGraph, doors: DoorAttachment, policy: SchedulerPolicy, cfg: SimulationConfig):
        if doors.k < 1:
            raise SimulationError("graph needs at least one Door")
        self.g = g
        self.doors = doors
        self.policy = policy
        self.cfg = cfg
        self.step = cfg.step_fn()
        self.z = cfg.z
        self.max_ticks = cfg.max_ticks or 64 * (g.n * g.n + g.n)
        self.rng = random.Random(policy.seed)
        self.robots: list[_Robot] = []
        self.occ: dict[int, int] = {}
        self.trace: list[TraceEvent] = []
        self.collisions = 0
        self.halted = False
        self.rr_last = -1
        self.tick = 0
        self.emit(-1, "Meta", -1, {
            "protocol": cfg.protocol, "sched": policy.kind, "activation": policy.activation,
            "visibility": self.z, "max_delay": cfg.max_delay, "doors": [d.door for d in doors.doors],
        })

    # -- bookkeeping ---------------------------------------------------------

    def emit(self, robot, kind, vertex, detail=None):
        self.trace.append(TraceEvent(self.tick, robot, kind, vertex, detail or {}))

    def config(self) -> dict:
        return {r.vertex: Cell(r.vars.color, r.in_transit) for r in self.robots}

    def spawn(self):
        for rank, d in enumerate(self.doors.doors, start=1):
            if d.door in self.occ:
                continue
            r = _Robot(len(self.robots), d.door, RobotVars(door_rank=rank))
            self.robots.append(r)
            self.occ[d.door] = r.rid
            self.emit(r.rid, "Spawn", d.door, {"rank": rank, "color": str(ON)})
            if self.policy.kind == "ASYNC":
                r.next_time = self.tick + self.delay(r)

    def delay(self, r: _Robot) -> int:
        if self.policy.activation == "scripted":
            seq = self.policy.script.get(r.rid, []) if self.policy.script else []
            if len(r.delays) < len(seq):
                d = seq[len(r.delays)]
            else:
                d = 1
        else:
            d = self.rng.randint(1, self.cfg.max_delay)
        r.delays.append(d)
        return d

    def active(self):
        return [r for r in self.robots if r.vars.state is not State.FINISHED]

    def terminated(self) -> bool:
        if any(r.vars.state is not State.FINISHED for r in self.robots):
            return False
        return all(self.occ.get(d.door) is not None for d in self.doors.doors)

    def pred_robot(self, r: _Robot, vars: RobotVars):
        if vars.pred is None:
            return None
        try:
            mid, _ = self.g.follow(r.vertex, vars.pred.one)
            end, _ = self.g.follow(mid, vars.pred.two)
        except IndexError:
            return None
        return self.occ.get(end)

    def look(self, r: _Robot, config):
        snap = make_snapshot(self.g, config, r.vertex, self.z)
        self.emit(r.rid, "Look", r.vertex, {"radius": self.z, "view": snapshot_digest(snap)})
        try:
            res = self.step(r.vars, snap)
        except ProtocolViolation as exc:
            raise SimulationError(f"robot {r.rid} at tick {self.tick}: {exc}") from exc
        pred = self.pred_robot(r, res.vars) if res.vars.state is State.FOLLOWER and r.vars.state is State.NONE else None
        return res, pred

    def apply(self, r: _Robot, res, pred):
        old = r.vars
        new = res.vars
        self.emit(r.rid, "ComputeDone", r.vertex, {"action": str(res.action)})
        if new.state is not old.state:
            detail = {"from": str(old.state), "to": str(new.state)}
            if new.state is State.FOLLOWER:
                detail["pred"] = pred
            self.emit(r.rid, "StateChange", r.vertex, detail)
        if new.color != old.color:
            detail = {"from": str(old.color), "to": str(new.color)}
            if new.color.kind == "DIR" and new.transferring:
                detail["transfer"] = True
            self.emit(r.rid, "ColorChange", r.vertex, detail)
        r.vars = new
        if new.state is State.FINISHED and old.state is not State.FINISHED:
            self.emit(r.rid, "Finish", r.vertex)

    def begin_move(self, r: _Robot, path: TwoHopPath):
        mid, _ = self.g.follow(r.vertex, path.one)
        dst, _ = self.g.follow(mid, path.two)
        r.move_path, r.move_src, r.move_mid, r.move_dst = path, r.vertex, mid, dst
        r.in_transit = True
        self.emit(r.rid, "MoveStart", r.vertex, {"path": [path.one, path.two], "mid": mid, "target": dst})

    def hop(self, r: _Robot, dst: int, claimed=None) -> bool:
        holder = self.occ.get(dst)
        if (holder is not None and holder != r.rid) or (claimed is not None and claimed.get(dst, r.rid) != r.rid):
            self.collisions += 1
            self.emit(r.rid, "Collision", dst, {"with": holder if holder is not None else claimed.get(dst)})
            self.halted = True
            return False
        if self.occ.get(r.vertex) == r.rid:
            del self.occ[r.vertex]
        self.occ[dst] = r.rid
        r.vertex = dst
        return True

    def end_move(self, r: _Robot):
        _, back = reverse_path(self.g, r.move_src, r.move_path)
        old = r.vars
        r.in_transit = False
        self.emit(r.rid, "MoveEnd", r.vertex, {"from": r.move_src})
        r.vars = arrive(r.vars, r.move_path, back)
        if r.vars.color != old.color:
            self.emit(r.rid, "ColorChange", r.vertex, {"from": str(old.color), "to": str(r.vars.color)})

    # -- synchronous rounds --------------------------------------------------

    def choose_active(self) -> list[_Robot]:
        alive = self.active()
        if not alive:
            return []
        pol = self.policy
        if pol.kind == "FSYNC":
            return alive
        if pol.activation == "scripted":
            rounds = pol.script or []
            idx = self.tick - 1
            if idx < len(rounds):
                ids = set(rounds[idx])
                return [r for r in alive if r.rid in ids]
            return alive
        if pol.activation == "roundrobin":
            later = [r for r in alive if r.rid > self.rr_last]
            pick = later[0] if later else alive[0]
            self.rr_last = pick.rid
            return [pick]
        chosen = [r for r in alive if r.idle_rounds + 1 >= pol.fairness_bound or self.rng.random() < pol.p_active]
        if not chosen:
            chosen = [self.rng.choice(alive)]
        return chosen

    def round(self):
        chosen = self.choose_active()
        for r in self.active():
            r.idle_rounds = 0 if r in chosen else r.idle_rounds + 1
        config = self.config()
        decisions = [(r, *self.look(r, config)) for r in chosen]
        movers = []
        for r, res, pred in decisions:
            self.apply(r, res, pred)
            if res.action.kind == "move":
                self.begin_move(r, res.action.path)
                movers.append(r)
        for stage in ("mid", "dst"):
            if self.halted:
                return
            claimed: dict[int, int] = {}
            edges = set()
            for r in movers:
                dst = r.move_mid if stage == "mid" else r.move_dst
                e = (min(r.vertex, dst), max(r.vertex, dst))
                if e in edges:
                    self.collisions += 1
                    self.emit(r.rid, "Collision", dst, {"edge": list(e)})
                    self.halted = True
                    return
                edges.add(e)
                if dst in claimed:
                    self.collisions += 1
                    self.emit(r.rid, "Collision", dst, {"with": claimed[dst]})
                    self.halted = True
                    return
                claimed[dst] = r.rid
            leaving = {r.vertex for r in movers}
            for r in movers:
                dst = r.move_mid if stage == "mid" else r.move_dst
                holder = self.occ.get(dst)
                if holder is not None and self.robots[holder].vertex not in leaving:
                    self.collisions += 1
                    self.emit(r.rid, "Collision", dst, {"with": holder})
                    self.halted = True
                    return
            for r in movers:
                if self.occ.get(r.vertex) == r.rid:
                    del self.occ[r.vertex]
            for r in movers:
                dst = r.move_mid if stage == "mid" else r.move_dst
                r.vertex = dst
                self.occ[dst] = r.rid
                if stage == "mid":
                    self.emit(r.rid, "Hop", dst)
        for r in movers:
            self.end_move(r)

    # -- asynchronous phases ---------------------------------------------------

    def async_tick(self):
        for r in list(self.robots):
            if self.halted:
                return
            if r.vars.state is State.FINISHED and r.phase == "idle":
                continue
            if r.next_time != self.tick:
                continue
            if r.phase == "idle":
                r.pending = self.look(r, self.config())
                r.phase = "compute"
                r.next_time = self.tick + self.delay(r)
            elif r.phase == "compute":
                res, pred = r.pending
                r.pending = None
                self.apply(r, res, pred)
                if res.action.kind == "move":
                    self.begin_move(r, res.action.path)
                    r.phase = "hop1"
                else:
                    r.phase = "idle"
                r.next_time = self.tick + self.delay(r)
            elif r.phase == "hop1":
                if not self.hop(r, r.move_mid):
                    return
                self.emit(r.rid, "Hop", r.move_mid)
                r.phase = "hop2"
                r.next_time = self.tick + self.delay(r)
            elif r.phase == "hop2":
                if not self.hop(r, r.move_dst):
                    return
                self.end_move(r)
                r.phase = "idle"
                r.next_time = self.tick + self.delay(r)

    # -- driver ----------------------------------------------------------------

    def run(self) -> Outcome:
        reason = "max_ticks"
        while self.tick < self.max_ticks:
            self.tick += 1
            self.spawn()
            if self.policy.kind == "ASYNC":
                self.async_tick()
            else:
                self.round()
            if self.halted:
                reason = "collision"
                break
            if self.terminated():
                reason = "terminated"
                break
        from .verify import compute_epochs  # local import: verify depends on engine types

        return Outcome(
            terminated=reason == "terminated",
            final_occupied={r.vertex for r in self.robots},
            m=len(self.robots),
            epochs=compute_epochs(self.trace),
            collision_count=self.collisions,
            trace=self.trace,
            ticks=self.tick,
            reason=reason,
        )


def run(g: PortGraph, doors: DoorAttachment, policy: SchedulerPolicy = SchedulerPolicy(), cfg: SimulationConfig = SimulationConfig()) -> Outcome:
    """Simulate until every robot is Finished and every Door holds a Finished robot,
    a collision occurs, or ``max_ticks`` runs out (``terminated`` is then False)."""
    return _Sim(g, doors, policy, cfg).run()


# -- determinism audit -------------------------------------------------------

def schedule_from_trace(trace) -> SchedulerPolicy:
    """Recover a scripted policy that reproduces ``trace``."""
    meta = trace[0] if trace and trace[0].kind == "Meta" else None
    if meta is None:
        raise ReplayDivergence(0, "Meta event", trace[0] if trace else None)
    kind = meta.detail["sched"]
    if kind == "ASYNC":
        last: dict[int, int] = {}
        delays: dict[int, list] = {}
        for ev in trace:
            if ev.kind in ("Spawn", "Look", "ComputeDone", "Hop", "MoveEnd"):
                if ev.kind != "Spawn":
                    delays.setdefault(ev.robot, []).append(ev.tick - last[ev.robot])
                last[ev.robot] = ev.tick
        return SchedulerPolicy(kind="ASYNC", activation="scripted", script=delays)
    rounds: dict[int, list] = {}
    horizon = 0
    for ev in trace:
        horizon = max(horizon, ev.tick)
        if ev.kind == "Look":
            rounds.setdefault(ev.tick, []).append(ev.robot)
    script = [rounds.get(t, []) for t in range(1, horizon + 1)]
    return SchedulerPolicy(kind=kind, activation="scripted", script=script)


def replay(trace, g: PortGraph, doors: DoorAttachment, cfg: SimulationConfig, strict: bool = False) -> bool:
    """Re-execute ``trace`` with its recorded schedule and compare event by event.

    Returns True on an exact match and False on a mismatched event. A Look
    that saw something else (another graph or configuration) raises
    :class:`ReplayDivergence`, as does any mismatch when ``strict`` is set.
    """
    trace = list(trace)
    policy = schedule_from_trace(trace)
    meta = trace[0].detail
    if meta.get("doors") != [d.door for d in doors.doors] or meta.get("protocol") != cfg.protocol or meta.get("visibility") != cfg.z:
        raise ReplayDivergence(0, trace[0], "different graph or configuration")
    horizon = max(ev.tick for ev in trace)
    cfg = SimulationConfig(**{**asdict(cfg), "max_ticks": horizon})
    try:
        again = run(g, doors, policy, cfg).trace
    except (IndexError, KeyError, SimulationError) as exc:
        raise ReplayDivergence(1, "replayable run", repr(exc)) from exc
    def header(ev):
        # the replay runs a scripted schedule; only the activation label differs
        return ev._replace(detail={k: v for k, v in ev.detail.items() if k != "activation"})

    trace = [header(trace[0])] + trace[1:]
    again = [header(again[0])] + again[1:]
    for i, (a, b) in enumerate(zip(trace, again)):
        if a != b:
            if strict or a.kind == "Look":
                # a Look that saw something else means a different world, not a different choice
                raise ReplayDivergence(i, a, b)
            return False
    if len(trace) != len(again):
        i = min(len(trace), len(again))
        if strict:
            raise ReplayDivergence(i, trace[i] if i < len(trace) else None, again[i] if i < len(again) else None)
        return False
    return True


# -- export --------------------------------------------------------------------

def write_trace(trace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in trace:
            fh.write(ev.to_json() + "\n")


def read_trace(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [TraceEvent.from_json(line) for line in fh if line.strip()]


def configuration_at(trace, tick: int) -> dict:
    """vertex -> color string after all events up to ``tick``."""
    where: dict[int, int] = {}
    color: dict[int, str] = {}
    for ev in trace:
        if ev.tick > tick:
            break
        if ev.kind == "Spawn":
            where[ev.robot] = ev.vertex
            color[ev.robot] = ev.detail.get("color", "ON")
        elif ev.kind in ("Hop", "MoveEnd"):
            where[ev.robot] = ev.vertex
        elif ev.kind == "ColorChange":
            color[ev.robot] = ev.detail["to"]
    return {v: color[r] for r, v in where.items()}


def dot_frame(g: PortGraph, doors: DoorAttachment, occupants: dict, name: str = "G") -> str:
    """Graphviz rendering of one configuration; occupied vertices carry their color."""
    door_set = set(doors.door_vertices)
    lines = [f"graph {name} {{", "  node [shape=circle];"]
    for v in range(g.n):
        attrs = []
        label = str(v)
        if v in occupants:
            label += f"\\n{occupants[v]}"
            attrs.append("style=filled")
            attrs.append('fillcolor="gray30"' if occupants[v] == "OFF" else 'fillcolor="lightblue"')
        if v in door_set:
            attrs.append("shape=doublecircle")
        attrs.insert(0, f'label="{label}"')
        lines.append(f"  {v} [{', '.join(attrs)}];")
    for u, pu, v, pv in g.edges():
        lines.append(f'  {u} -- {v} [taillabel="{pu}", headlabel="{pv}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def epoch_frames(trace, g: PortGraph, doors: DoorAttachment) -> list[str]:
    """One DOT frame per epoch boundary (plus the final configuration)."""
    from .verify import epoch_boundaries

    ticks = epoch_boundaries(trace)
    last = max((ev.tick for ev in trace), default=0)
    if not ticks or ticks[-1] != last:
        ticks = ticks + [last]
    return [dot_frame(g, doors, configuration_at(trace, t), name=f"epoch{i}") for i, t in enumerate(ticks)]
