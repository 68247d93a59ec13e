"""Anonymous port-labeled graphs and the Door construction.

Vertex ids are dense integers that only the simulator sees. Ports at a
vertex ``v`` are exactly ``1..deg(v)``.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from itertools import chain
from pathlib import Path


class GraphError(ValueError):
    pass


class DisconnectedGraph(GraphError):
    pass


class DuplicatePort(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class PortGap(GraphError):
    pass


class MultiEdge(GraphError):
    pass


class UnknownVertex(GraphError):
    pass


class DuplicateAnchor(GraphError):
    pass


class InfeasibleParameters(GraphError):
    pass


@dataclass(frozen=True, eq=False)
class PortGraph:
    """Immutable port-labeled graph.

    ``ports[v][p - 1] == (u, q)`` means port ``p`` at ``v`` leads to ``u``,
    arriving through port ``q`` at ``u``.
    """

    ports: tuple[tuple[tuple[int, int], ...], ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.ports)

    @property
    def max_degree(self) -> int:
        return max((len(p) for p in self.ports), default=0)

    def degree(self, v: int) -> int:
        return len(self.ports[v])

    def neighbors(self, v: int) -> list[int]:
        return [u for u, _ in self.ports[v]]

    def follow(self, v: int, port: int) -> tuple[int, int]:
        """Return ``(neighbor, arrival_port)`` for leaving ``v`` through ``port``."""
        return self.ports[v][port - 1]

    def edges(self) -> list[tuple[int, int, int, int]]:
        out = []
        for v, plist in enumerate(self.ports):
            for p, (u, q) in enumerate(plist, start=1):
                if v < u:
                    out.append((v, p, u, q))
        return out

    def distances_from(self, v: int) -> list[int]:
        """BFS distances from ``v`` (-1 for unreachable); memoized."""
        key = ("dist", v)
        if key not in self._cache:
            dist = [-1] * self.n
            dist[v] = 0
            queue = deque([v])
            while queue:
                x = queue.popleft()
                for y, _ in self.ports[x]:
                    if dist[y] < 0:
                        dist[y] = dist[x] + 1
                        queue.append(y)
            self._cache[key] = dist
        return self._cache[key]

    def distance(self, u: int, v: int) -> int:
        return self.distances_from(u)[v]

    def __eq__(self, other):
        return isinstance(other, PortGraph) and self.ports == other.ports

    def __hash__(self):
        return hash(self.ports)


@dataclass(frozen=True)
class Door:
    door: int  # d_i, degree 1
    buffer: int  # d_i', degree 2
    anchor: int  # v_i in the original graph


@dataclass(frozen=True)
class DoorAttachment:
    doors: tuple[Door, ...]

    @property
    def k(self) -> int:
        return len(self.doors)

    def rank_of(self, door_vertex: int) -> int:
        for i, d in enumerate(self.doors, start=1):
            if d.door == door_vertex:
                return i
        raise UnknownVertex(door_vertex)

    @property
    def door_vertices(self) -> list[int]:
        return [d.door for d in self.doors]


def build_graph(edge_list, n: int | None = None) -> PortGraph:
    """Build and validate a port graph from ``(u, pu, v, pv)`` records.

    ``n`` defaults to one more than the largest vertex mentioned (at least 1).
    """
    edge_list = list(edge_list)
    if n is None:
        n = 1 + max(chain.from_iterable((u, v) for u, _, v, _ in edge_list), default=0)
    slots: list[dict[int, tuple[int, int]]] = [{} for _ in range(n)]
    seen_pairs = set()
    for u, pu, v, pv in edge_list:
        for x in (u, v):
            if not 0 <= x < n:
                raise UnknownVertex(x)
        if u == v:
            raise SelfLoop(f"self-loop at {u}")
        pair = (min(u, v), max(u, v))
        if pair in seen_pairs:
            raise MultiEdge(f"multiple edges between {u} and {v}")
        seen_pairs.add(pair)
        for x, px, y, py in ((u, pu, v, pv), (v, pv, u, pu)):
            if px in slots[x]:
                raise DuplicatePort(f"port {px} used twice at vertex {x}")
            slots[x][px] = (y, py)
    ports = []
    for v, s in enumerate(slots):
        if sorted(s) != list(range(1, len(s) + 1)):
            raise PortGap(f"ports at vertex {v} are {sorted(s)}, expected 1..{len(s)}")
        ports.append(tuple(s[p] for p in range(1, len(s) + 1)))
    g = PortGraph(tuple(ports))
    if any(d < 0 for d in g.distances_from(0)):
        raise DisconnectedGraph("graph is not connected")
    return g


def attach_doors(g: PortGraph, anchors) -> tuple[PortGraph, DoorAttachment]:
    """Append a path ``d_i - d_i' - v_i`` for every anchor, in priority order.

    The new edge at the anchor gets port ``deg(v_i) + 1``; at ``d_i'`` port 1
    leads to the anchor and port 2 to the door.
    """
    anchors = list(anchors)
    if len(set(anchors)) != len(anchors):
        raise DuplicateAnchor(f"anchors must be distinct: {anchors}")
    for a in anchors:
        if not 0 <= a < g.n:
            raise UnknownVertex(a)
    ports = [list(p) for p in g.ports]
    doors = []
    for a in anchors:
        buf, door = len(ports), len(ports) + 1
        ports[a].append((buf, 1))
        ports.append([(a, len(ports[a])), (door, 1)])
        ports.append([(buf, 2)])
        doors.append(Door(door=door, buffer=buf, anchor=a))
    return PortGraph(tuple(tuple(p) for p in ports)), DoorAttachment(tuple(doors))


def _check(g: PortGraph, v: int):
    if not 0 <= v < g.n:
        raise UnknownVertex(v)


def neighborhood(g: PortGraph, v: int, k: int) -> set[int]:
    """Vertices at distance exactly ``k`` from ``v``."""
    _check(g, v)
    if k < 0:
        raise ValueError("k must be non-negative")
    return {u for u, d in enumerate(g.distances_from(v)) if d == k}


def ball(g: PortGraph, v: int, k: int) -> set[int]:
    """Vertices within ``k`` hops of ``v``."""
    _check(g, v)
    if k < 0:
        raise ValueError("k must be non-negative")
    return {u for u, d in enumerate(g.distances_from(v)) if 0 <= d <= k}


def path_set(g: PortGraph, u: int, w: int, k: int) -> set[int]:
    """Union of the vertices of all simple ``u``-``w`` paths of length <= ``k``."""
    _check(g, u)
    _check(g, w)
    if k < 1:
        raise ValueError("k must be >= 1")
    dist_w = g.distances_from(w)
    out: set[int] = set()
    stack = [u]
    on_path = {u}

    def dfs(x: int, length: int):
        if x == w:
            out.update(stack)
            return
        for y, _ in g.ports[x]:
            if y in on_path or dist_w[y] < 0 or length + 1 + dist_w[y] > k:
                continue
            stack.append(y)
            on_path.add(y)
            dfs(y, length + 1)
            stack.pop()
            on_path.discard(y)

    if dist_w[u] <= k:
        dfs(u, 0)
    return out


def is_free(g: PortGraph, occupied, v: int) -> bool:
    """True iff no neighbor of ``v`` is occupied."""
    return not any(u in occupied for u, _ in g.ports[v])


def random_connected_graph(n: int, max_deg: int, seed: int) -> PortGraph:
    """Random connected graph with degree bound, deterministic in ``seed``.

    A random spanning tree is grown first, then extra edges are sprinkled in.
    Ports are shuffled per vertex.
    """
    if n < 1:
        raise InfeasibleParameters("n must be >= 1")
    if n == 2 and max_deg < 1 or n >= 3 and max_deg < 2:
        raise InfeasibleParameters(f"cannot build connected graph with n={n}, max_deg={max_deg}")
    rng = random.Random(seed)
    deg = [0] * n
    adj: set[tuple[int, int]] = set()
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        v = order[i]
        choices = [u for u in order[:i] if deg[u] < max_deg]
        u = rng.choice(choices)
        adj.add((min(u, v), max(u, v)))
        deg[u] += 1
        deg[v] += 1
    extra = rng.randint(0, n)
    for _ in range(extra):
        u, v = rng.sample(range(n), 2) if n >= 2 else (0, 0)
        if u == v or (min(u, v), max(u, v)) in adj or deg[u] >= max_deg or deg[v] >= max_deg:
            continue
        adj.add((min(u, v), max(u, v)))
        deg[u] += 1
        deg[v] += 1
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for u, v in sorted(adj):
        nbrs[u].append(v)
        nbrs[v].append(u)
    port_of = {}
    for v in range(n):
        rng.shuffle(nbrs[v])
        for p, u in enumerate(nbrs[v], start=1):
            port_of[(v, u)] = p
    edges = [(u, port_of[(u, v)], v, port_of[(v, u)]) for u, v in sorted(adj)]
    return build_graph(edges, n=n)


# -- text format -------------------------------------------------------------

def parse_graph_text(text: str) -> tuple[PortGraph, DoorAttachment, dict[str, str]]:
    """Parse ``graph``/``edge``/``door``/``set`` lines. Returns (G, doors, settings)."""
    n = None
    edges = []
    doors: dict[int, int] = {}
    settings: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "graph" and len(parts) == 2:
                n = int(parts[1])
            elif parts[0] == "edge" and len(parts) == 5:
                edges.append(tuple(int(x) for x in parts[1:]))
            elif parts[0] == "door" and len(parts) == 3:
                i, anchor = int(parts[1]), int(parts[2])
                if i in doors:
                    raise GraphError(f"line {lineno}: door {i} declared twice")
                doors[i] = anchor
            elif parts[0] == "set" and len(parts) == 3:
                settings[parts[1]] = parts[2]
            else:
                raise GraphError(f"line {lineno}: cannot parse {raw!r}")
        except ValueError as exc:
            if isinstance(exc, GraphError):
                raise
            raise GraphError(f"line {lineno}: {exc}") from None
    if n is None:
        raise GraphError("missing 'graph <n>' header")
    if sorted(doors) != list(range(1, len(doors) + 1)):
        raise GraphError(f"door indices must be 1..k, got {sorted(doors)}")
    h = build_graph(edges, n=n)
    g, att = attach_doors(h, [doors[i] for i in sorted(doors)])
    return g, att, settings


def load_graph(path) -> tuple[PortGraph, DoorAttachment, dict[str, str]]:
    return parse_graph_text(Path(path).read_text())


def format_graph(h: PortGraph, anchors) -> str:
    """Serialize an original graph ``H`` plus door anchors in the text format."""
    lines = [f"graph {h.n}"]
    lines += [f"edge {u} {pu} {v} {pv}" for u, pu, v, pv in h.edges()]
    lines += [f"door {i} {a}" for i, a in enumerate(anchors, start=1)]
    return "\n".join(lines) + "\n"
