"""Minimum-weight perfect matching over a nest's detection-event graph."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import networkx as nx

from .nest import Nest

BOUNDARY = "boundary"
MAX_EXHAUSTIVE = 12


class WeightDomainError(ValueError):
    pass


class DisconnectedError(ValueError):
    pass


class ParityError(ValueError):
    pass


def stick_weight(q: float) -> float:
    """Log-likelihood ratio weight, positive for q < 0.5."""
    if not 0 < q < 0.5:
        raise WeightDomainError(f"stick probability {q} outside (0, 0.5)")
    return -math.log(q / (1 - q))


def _node_key(node) -> tuple:
    # events sort by coordinates; the boundary node sorts last
    return (1,) if node == BOUNDARY else (0,) + tuple(node)


@dataclass
class MatchingGraph:
    nodes: list  # node objects, index = id; BOUNDARY (if present) is last
    adjacency: list[list[tuple[int, float, int]]]  # (neighbour id, weight, flip bitmask)
    classes: tuple[str, ...]
    has_boundary: bool
    _index: dict = field(default_factory=dict, repr=False)
    _paths: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {n: k for k, n in enumerate(self.nodes)}

    def node_id(self, node) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise KeyError(f"unknown node {node!r}") from None

    @property
    def boundary_id(self) -> Optional[int]:
        return len(self.nodes) - 1 if self.has_boundary else None

    def edges(self):
        for u, nbrs in enumerate(self.adjacency):
            for v, w, f in nbrs:
                if u < v:
                    yield self.nodes[u], self.nodes[v], w, f

    def shortest_from(self, src: int) -> tuple[list[float], list[int]]:
        """Dijkstra from ``src``; returns (distance, flip parity) per node id.

        Ties resolve toward the path first popped under (distance, node id)
        ordering; relaxations need a strict improvement.  Results are cached.
        """
        hit = self._paths.get(src)
        if hit is not None:
            return hit
        n = len(self.nodes)
        dist = [math.inf] * n
        flips = [0] * n
        done = [False] * n
        dist[src] = 0.0
        heap = [(0.0, src)]
        while heap:
            du, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            fu = flips[u]
            for v, w, f in self.adjacency[u]:
                nd = du + w
                if nd < dist[v]:
                    dist[v] = nd
                    flips[v] = fu ^ f
                    heapq.heappush(heap, (nd, v))
        self._paths[src] = (dist, flips)
        return dist, flips


def _mask(bits: Sequence[int]) -> int:
    return sum(1 << k for k, b in enumerate(bits) if b)


def _bits(mask: int, n: int) -> tuple[int, ...]:
    return tuple((mask >> k) & 1 for k in range(n))


def build_matching_graph(nest: Nest) -> MatchingGraph:
    """One edge per stick; virtual planar endpoints merge into one boundary node.

    Where a node has sticks to both planar edges, only the lighter one is
    kept (ties keep the lexicographically smaller original endpoint).
    """
    best: dict[tuple, tuple[float, int, tuple]] = {}
    events = set()
    for s in nest:
        w = stick_weight(s.probability)
        ends = []
        for e in (s.a, s.b):
            if nest.is_boundary(e):
                ends.append(BOUNDARY)
            else:
                ends.append(e)
                events.add(e)
        key = tuple(sorted(ends, key=_node_key))
        cand = (w, _mask(s.logical_flips), tuple(sorted((s.a, s.b))))
        if key not in best or cand < best[key]:
            best[key] = cand
    has_boundary = any(BOUNDARY in k for k in best)
    nodes = sorted(events, key=_node_key)
    if has_boundary:
        nodes.append(BOUNDARY)
    index = {n: k for k, n in enumerate(nodes)}
    adjacency: list[list[tuple[int, float, int]]] = [[] for _ in nodes]
    for (u, v), (w, f, _) in sorted(best.items(), key=lambda kv: (_node_key(kv[0][0]), _node_key(kv[0][1]))):
        a, b = index[u], index[v]
        adjacency[a].append((b, w, f))
        adjacency[b].append((a, w, f))
    return MatchingGraph(nodes, adjacency, tuple(nest.classes), has_boundary)


def pairwise_weight(graph: MatchingGraph, a: Hashable, b: Hashable) -> tuple[float, tuple[int, ...]]:
    """Shortest-path weight between two nodes and the flip parity along it."""
    ia, ib = graph.node_id(a), graph.node_id(b)
    dist, flips = graph.shortest_from(min(ia, ib))
    other = max(ia, ib)
    if math.isinf(dist[other]):
        raise DisconnectedError(f"{a!r} and {b!r} are not connected")
    return dist[other], _bits(flips[other], len(graph.classes))


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[Hashable, Hashable], ...]
    total_weight: float
    logical_flips: tuple[int, ...]


def _pair_table(graph: MatchingGraph, events: Sequence[Hashable]):
    ids = [graph.node_id(e) for e in events]
    if len(set(ids)) != len(ids):
        raise ValueError("events must be distinct")
    n = len(ids)
    w = [[math.inf] * n for _ in range(n)]
    f = [[0] * n for _ in range(n)]
    wb = [math.inf] * n
    fb = [0] * n
    bid = graph.boundary_id
    for x in range(n):
        dist, flips = graph.shortest_from(ids[x])
        for y in range(n):
            if y != x:
                w[x][y] = dist[ids[y]]
                f[x][y] = flips[ids[y]]
        if bid is not None:
            wb[x] = dist[bid]
            fb[x] = flips[bid]
    return w, f, wb, fb


def _finish(graph, events, choice, w, f, wb, fb) -> Matching:
    """Build a Matching from index pairs; ``None`` partner means the boundary."""
    total = 0.0
    mask = 0
    pairs = []
    for x, y in choice:
        if y is None:
            total += wb[x]
            mask ^= fb[x]
            pairs.append((events[x], BOUNDARY))
        else:
            total += w[x][y]
            mask ^= f[x][y]
            a, b = sorted((events[x], events[y]), key=_node_key)
            pairs.append((a, b))
    if math.isinf(total):
        raise DisconnectedError("no perfect matching reaches every event")
    pairs.sort(key=lambda pr: (_node_key(pr[0]), _node_key(pr[1])))
    return Matching(tuple(pairs), total, _bits(mask, len(graph.classes)))


def _check_parity(graph: MatchingGraph, events: Sequence) -> None:
    if not graph.has_boundary and len(events) % 2:
        raise ParityError(f"odd number of events ({len(events)}) without a boundary")


DP_LIMIT = 10


def _subset_dp(n: int, w, wb, boundary: bool) -> list:
    """Exact matching by dynamic programming over subsets of unmatched events."""
    full = (1 << n) - 1
    best = {0: (0.0, None)}

    def solve(mask: int) -> float:
        hit = best.get(mask)
        if hit is not None:
            return hit[0]
        x = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << x)
        opt = (math.inf, None)
        if boundary:
            opt = (wb[x] + solve(rest), (x, None))
        y_mask = rest
        while y_mask:
            y = (y_mask & -y_mask).bit_length() - 1
            y_mask &= y_mask - 1
            cand = w[x][y] + solve(rest & ~(1 << y))
            if cand < opt[0]:
                opt = (cand, (x, y))
        best[mask] = opt
        return opt[0]

    solve(full)
    choice = []
    mask = full
    while mask:
        pair = best[mask][1]
        if pair is None:
            raise DisconnectedError("no perfect matching reaches every event")
        choice.append(pair)
        mask &= ~(1 << pair[0])
        if pair[1] is not None:
            mask &= ~(1 << pair[1])
    return choice


def mwpm(graph: MatchingGraph, events: Sequence[Hashable], method: str = "blossom") -> Matching:
    """Exact minimum-weight perfect matching of ``events``.

    Planar graphs give every event a private boundary copy; copies pair with
    each other at zero cost, so any subset of events may end on the
    boundary.  ``method="blossom"`` delegates to networkx's blossom
    implementation; ``"auto"`` switches to a subset dynamic program for up
    to ``DP_LIMIT`` events, which is much faster on the small sets typical
    of low-noise sampling.
    """
    if method not in ("blossom", "auto", "dp"):
        raise ValueError("method must be 'blossom', 'auto' or 'dp'")
    _check_parity(graph, events)
    events = list(events)
    n = len(events)
    if n == 0:
        return Matching((), 0.0, _bits(0, len(graph.classes)))
    w, f, wb, fb = _pair_table(graph, events)
    boundary = graph.has_boundary

    if n == 1:
        return _finish(graph, events, [(0, None)], w, f, wb, fb)
    if n == 2:
        if boundary and wb[0] + wb[1] <= w[0][1]:
            return _finish(graph, events, [(0, None), (1, None)], w, f, wb, fb)
        return _finish(graph, events, [(0, 1)], w, f, wb, fb)
    if method == "dp" or (method == "auto" and n <= DP_LIMIT):
        return _finish(graph, events, _subset_dp(n, w, wb, boundary), w, f, wb, fb)

    finite = [x for row in w for x in row if not math.isinf(x)] + [x for x in wb if not math.isinf(x)]
    big = 1.0 + 2.0 * sum(finite)
    g = nx.Graph()
    for x in range(n):
        for y in range(x + 1, n):
            if not math.isinf(w[x][y]):
                g.add_edge(x, y, weight=big - w[x][y])
        if boundary:
            if not math.isinf(wb[x]):
                g.add_edge(x, n + x, weight=big - wb[x])
            for y in range(x + 1, n):
                g.add_edge(n + x, n + y, weight=big)
    mate = nx.max_weight_matching(g, maxcardinality=True)
    choice = []
    for u, v in mate:
        u, v = min(u, v), max(u, v)
        if u >= n:
            continue  # two boundary copies
        choice.append((u, None) if v >= n else (u, v))
    covered = {x for pr in choice for x in pr if x is not None}
    if len(covered) != n:
        raise DisconnectedError("no perfect matching reaches every event")
    return _finish(graph, events, choice, w, f, wb, fb)


def exhaustive_mwpm(graph: MatchingGraph, events: Sequence[Hashable]) -> Matching:
    """Minimum over every perfect matching, by direct enumeration."""
    if len(events) > MAX_EXHAUSTIVE:
        raise ValueError(f"exhaustive matching limited to {MAX_EXHAUSTIVE} events")
    _check_parity(graph, events)
    events = list(events)
    n = len(events)
    if n == 0:
        return Matching((), 0.0, _bits(0, len(graph.classes)))
    w, f, wb, fb = _pair_table(graph, events)
    boundary = graph.has_boundary
    best_w = math.inf
    best: list = []

    def rec(rest: tuple[int, ...], acc: float, chosen: list):
        nonlocal best_w, best
        if not rest:
            if acc < best_w:
                best_w = acc
                best = list(chosen)
            return
        x, others = rest[0], rest[1:]
        if boundary:
            chosen.append((x, None))
            rec(others, acc + wb[x], chosen)
            chosen.pop()
        for k, y in enumerate(others):
            chosen.append((x, y))
            rec(others[:k] + others[k + 1:], acc + w[x][y], chosen)
            chosen.pop()

    rec(tuple(range(n)), 0.0, [])
    if math.isinf(best_w):
        raise DisconnectedError("no perfect matching reaches every event")
    return _finish(graph, events, best, w, f, wb, fb)


def matching_logical_parity(matching: Matching) -> tuple[int, ...]:
    return matching.logical_flips
