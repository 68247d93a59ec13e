"""Robot lights, persistent variables and the Look-phase snapshot.

A snapshot names every visible vertex by its canonical relative position:
the lexicographically smallest shortest port sequence from the observer.
Nothing in it identifies a robot or a global vertex.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

from .graph import PortGraph


class Color(NamedTuple):
    kind: str
    arg: int = 0

    def __str__(self):
        if self.kind in ("DIR", "WAIT"):
            return f"{self.kind}:{self.arg}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "Color":
        kind, _, arg = text.partition(":")
        if kind not in _KINDS:
            raise ValueError(f"unknown color {text!r}")
        if kind in ("DIR", "WAIT"):
            return cls(kind, int(arg))
        return cls(kind)


_KINDS = ("ON", "DIR", "CONF", "CONFC", "CONF2", "CONF3", "WAIT", "MOV", "OFF")

ON = Color("ON")
CONF = Color("CONF")
CONFC = Color("CONFC")
CONF2 = Color("CONF2")
CONF3 = Color("CONF3")
MOV = Color("MOV")
OFF = Color("OFF")


def DIR(port: int) -> Color:
    return Color("DIR", port)


def WAIT(rank: int = 1) -> Color:
    return Color("WAIT", rank)


def palette(max_degree: int, k: int = 1) -> list[Color]:
    """Every color a robot may show: Δ+8 for one door, Δ+k+7 for k doors."""
    fixed = [ON, CONF, CONFC, CONF2, CONF3, MOV, OFF]
    return fixed + [DIR(p) for p in range(1, max_degree + 1)] + [WAIT(r) for r in range(1, k + 1)]


def dominates(a: Color, b: Color) -> bool:
    """WAIT(j) dominates WAIT(i) iff j < i."""
    return a.kind == "WAIT" and b.kind == "WAIT" and a.arg < b.arg


class State(enum.Enum):
    NONE = "None"
    LEADER = "Leader"
    FOLLOWER = "Follower"
    FINISHED = "Finished"

    def __str__(self):
        return self.value


class TwoHopPath(NamedTuple):
    one: int
    two: int


@dataclass(frozen=True)
class RobotVars:
    state: State = State.NONE
    color: Color = ON
    door_rank: int = 1
    # direction set for the current move
    target: Optional[TwoHopPath] = None
    # directions received from the predecessor, one port at a time
    next_one: Optional[int] = None
    next_two: Optional[int] = None
    # the two hops last moved, and the ports leading back along them
    entry: Optional[TwoHopPath] = None
    back: Optional[TwoHopPath] = None
    has_successor: bool = False
    # where the predecessor sits, relative to this robot
    pred: Optional[TwoHopPath] = None
    # leader: pointing at its successor to hand over leadership
    transferring: bool = False
    # follower: acknowledged a leadership hand-over, waiting for OFF
    taking_over: bool = False

    def evolve(self, **kw) -> "RobotVars":
        return replace(self, **kw)

    @property
    def next_target(self) -> Optional[TwoHopPath]:
        if self.next_one is None or self.next_two is None:
            return None
        return TwoHopPath(self.next_one, self.next_two)


class Cell(NamedTuple):
    color: Color
    in_transit: bool = False


class LocalView:
    """Topology of ``ball(here, z)`` indexed by local slots; slot 0 is the observer.

    ``port_to[i][p - 1]`` is the slot reached from slot ``i`` via port ``p``,
    or -1 when that neighbor lies outside the visible ball.
    """

    __slots__ = ("radius", "paths", "slot", "port_to", "dist", "_vertices")

    def __init__(self, g: PortGraph, here: int, z: int):
        self.radius = z
        paths = {here: ()}
        order = [here]
        queue = deque([here])
        while queue:
            x = queue.popleft()
            if len(paths[x]) == z:
                continue
            for p, (y, _) in enumerate(g.ports[x], start=1):
                if y not in paths:
                    paths[y] = paths[x] + (p,)
                    order.append(y)
                    queue.append(y)
        local = {v: i for i, v in enumerate(order)}
        self._vertices = tuple(order)
        self.paths = tuple(paths[v] for v in order)
        self.slot = {path: i for i, path in enumerate(self.paths)}
        self.port_to = tuple(
            tuple(local.get(y, -1) for y, _ in g.ports[v]) for v in order
        )
        m = len(order)
        dist = []
        for s in range(m):
            d = [-1] * m
            d[s] = 0
            q = deque([s])
            while q:
                x = q.popleft()
                for y in self.port_to[x]:
                    if y >= 0 and d[y] < 0:
                        d[y] = d[x] + 1
                        q.append(y)
            dist.append(tuple(d))
        self.dist = tuple(dist)

    def __len__(self):
        return len(self.paths)

    def walk(self, start: int, ports) -> int:
        """Follow ``ports`` from slot ``start``; -1 if the walk leaves the view."""
        x = start
        for p in ports:
            if x < 0 or not 1 <= p <= len(self.port_to[x]):
                return -1
            x = self.port_to[x][p - 1]
        return x

    def neighbors(self, i: int) -> list[int]:
        return [y for y in self.port_to[i] if y >= 0]


def local_view(g: PortGraph, here: int, z: int) -> LocalView:
    key = ("view", here, z)
    view = g._cache.get(key)
    if view is None:
        view = g._cache[key] = LocalView(g, here, z)
    return view


@dataclass(frozen=True)
class Snapshot:
    radius: int
    view: LocalView
    cells: tuple  # per slot: Cell or None when empty
    self_color: Color

    def cell(self, i: int) -> Optional[Cell]:
        return self.cells[i] if i >= 0 else None

    def color_at(self, i: int) -> Optional[Color]:
        c = self.cells[i] if i >= 0 else None
        return c.color if c is not None else None

    def occupied(self, i: int) -> bool:
        return i >= 0 and self.cells[i] is not None

    def at(self, path) -> Optional[Cell]:
        """Cell at a relative position (a port sequence from the observer)."""
        i = self.view.walk(0, path)
        return self.cell(i)

    def robots(self):
        """Slots holding a robot other than the observer."""
        return [i for i, c in enumerate(self.cells) if c is not None and i != 0]

    @property
    def positions(self) -> dict:
        """Relative position -> cell, for every visible vertex."""
        return dict(zip(self.view.paths, self.cells))

    def local_ports(self) -> dict:
        """Relative position -> degree, for every visible vertex."""
        return {p: len(t) for p, t in zip(self.view.paths, self.view.port_to)}


def make_snapshot(g: PortGraph, config: dict, here: int, z: int) -> Snapshot:
    """What a robot at ``here`` sees with visibility ``z``.

    ``config`` maps vertex -> Cell (or a ``(Color, in_transit)`` pair).
    """
    view = local_view(g, here, z)
    cells = []
    for v in view._vertices:
        c = config.get(v)
        if c is not None and not isinstance(c, Cell):
            c = Cell(*c)
        cells.append(c)
    own = cells[0]
    return Snapshot(z, view, tuple(cells), own.color if own is not None else ON)


def resolve_predecessor(snap: Snapshot, rank: Optional[int] = None) -> Optional[tuple]:
    """Relative position of the nearest non-Finished robot within two hops.

    With ``rank`` given, a leader showing another door's WAIT color is not a
    candidate. Ties go to the lexicographically smallest position.
    """
    best = None
    for i in snap.robots():
        d = snap.view.dist[0][i]
        if not 1 <= d <= 2:
            continue
        col = snap.cells[i].color
        if col == OFF:
            continue
        if rank is not None and col.kind == "WAIT" and col.arg != rank:
            continue
        key = (d, snap.view.paths[i])
        if best is None or key < best:
            best = key
    return best[1] if best else None


def successor_position(vars: RobotVars) -> Optional[TwoHopPath]:
    """Ports leading back to where the successor sits (reverse of the last move)."""
    if vars.entry is None or not vars.has_successor:
        return None
    return vars.back


def reverse_path(g: PortGraph, start: int, path: TwoHopPath) -> tuple[int, TwoHopPath]:
    """Walk ``path`` from ``start``; return the endpoint and the ports leading back."""
    mid, q1 = g.follow(start, path.one)
    end, q2 = g.follow(mid, path.two)
    return end, TwoHopPath(q2, q1)
