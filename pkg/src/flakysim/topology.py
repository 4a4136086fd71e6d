"""Process connectivity graphs and failure-pattern algebra.

Processes are the integers ``1..n``; a channel is an ordered pair ``(p, q)``.
Everything here is an immutable value, so the functions are safe to share
between simulations.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Iterator

Channel = tuple[int, int]


class TopologyError(ValueError):
    """Raised for inconsistent graphs or failure patterns."""


@dataclass(frozen=True)
class FailurePattern:
    crashed: frozenset[int] = frozenset()
    faulty_channels: frozenset[Channel] = frozenset()

    def __init__(self, crashed: Iterable[int] = (), faulty_channels: Iterable[Channel] = ()):
        object.__setattr__(self, "crashed", frozenset(crashed))
        object.__setattr__(self, "faulty_channels", frozenset(tuple(c) for c in faulty_channels))
        for p, q in self.faulty_channels:
            if p == q:
                raise TopologyError(f"self-channel ({p},{p}) cannot be faulty")
            if p in self.crashed or q in self.crashed:
                raise TopologyError(
                    f"faulty channel ({p},{q}) touches a crashed process; "
                    "channels of crashed processes fail implicitly")

    def validate_for(self, n: int) -> None:
        for p in self.crashed:
            if not 1 <= p <= n:
                raise TopologyError(f"crashed process {p} outside 1..{n}")
        for p, q in self.faulty_channels:
            if not (1 <= p <= n and 1 <= q <= n):
                raise TopologyError(f"faulty channel ({p},{q}) outside 1..{n}")


@dataclass(frozen=True)
class TopologyGraph:
    vertices: frozenset[int]
    edges: frozenset[Channel]

    def __init__(self, vertices: Iterable[int], edges: Iterable[Channel]):
        vs = frozenset(vertices)
        es = frozenset((p, q) for p, q in edges if p != q)
        for p, q in es:
            if p not in vs or q not in vs:
                raise TopologyError(f"edge ({p},{q}) references a missing vertex")
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "edges", es)

    @classmethod
    def complete(cls, n: int) -> "TopologyGraph":
        ps = range(1, n + 1)
        return cls(ps, [(p, q) for p in ps for q in ps if p != q])

    def successors(self, v: int) -> list[int]:
        return sorted(q for p, q in self.edges if p == v)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {v: [] for v in self.vertices}
        for p, q in self.edges:
            adj[p].append(q)
        for v in adj:
            adj[v].sort()
        return adj


@dataclass(frozen=True)
class FailProneSystem:
    patterns: frozenset[FailurePattern]

    def __init__(self, patterns: Iterable[FailurePattern]):
        ps = frozenset(patterns)
        if not ps:
            raise TopologyError("a fail-prone system needs at least one pattern")
        object.__setattr__(self, "patterns", ps)

    @classmethod
    def generate(cls, n: int, max_crashes: int,
                 channel_faults: Callable[[frozenset[int]], Iterable[Iterable[Channel]]] | None = None,
                 ) -> "FailProneSystem":
        """Build the extensional form from crash sets of size <= max_crashes.

        ``channel_faults`` maps a crash set to the faulty-channel sets allowed
        alongside it; by default channels between correct processes never fail.
        """
        pats = []
        for k in range(max_crashes + 1):
            for crashed in combinations(range(1, n + 1), k):
                cs = frozenset(crashed)
                options = channel_faults(cs) if channel_faults else [()]
                pats.extend(FailurePattern(cs, chans) for chans in options)
        return cls(pats)

    @classmethod
    def minority(cls, n: int) -> "FailProneSystem":
        return cls.generate(n, (n - 1) // 2)


def residual_graph(g: TopologyGraph, f: FailurePattern) -> TopologyGraph:
    """Remove the crashed processes, their channels, and the faulty channels."""
    missing = f.crashed - g.vertices
    if missing:
        raise TopologyError(f"crashed processes {sorted(missing)} are not in the graph")
    vs = g.vertices - f.crashed
    es = [(p, q) for p, q in g.edges
          if p in vs and q in vs and (p, q) not in f.faulty_channels]
    return TopologyGraph(vs, es)


def strongly_connected_components(g: TopologyGraph) -> list[frozenset[int]]:
    """Tarjan's algorithm, iterative. Components are sorted by smallest member."""
    adj = g.adjacency()
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[frozenset[int]] = []
    counter = 0

    for root in sorted(g.vertices):
        if root in index:
            continue
        work: list[tuple[int, Iterator[int]]] = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj[w])))
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])
                if low[v] == index[v]:
                    comp = set()
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.add(w)
                        if w == v:
                            break
                    out.append(frozenset(comp))
    out.sort(key=min)
    return out


def connected_core(g: TopologyGraph, f: FailurePattern, n: int) -> frozenset[int] | None:
    """The SCC of the residual graph holding a strict majority of all n processes."""
    for comp in strongly_connected_components(residual_graph(g, f)):
        if 2 * len(comp) > n:
            return comp
    return None


def _bfs(adj: dict[int, list[int]], src: int, allowed: frozenset[int]) -> dict[int, int]:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for w in adj.get(v, ()):
            if w in allowed and w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def diameter(g: TopologyGraph, s: Iterable[int]) -> int:
    """Longest shortest-path hop count between ordered pairs of ``s``.

    Paths may only use edges between members of ``s``.
    """
    members = frozenset(s)
    if not members:
        raise TopologyError("diameter of an empty set")
    adj = g.adjacency()
    best = 0
    for u in sorted(members):
        dist = _bfs(adj, u, members)
        if len(dist) != len(members):
            raise TopologyError(f"{sorted(members)} is not strongly connected")
        best = max(best, max(dist.values()))
    return best


def is_k_fail_prone(fps: FailProneSystem, k: int, n: int) -> bool:
    crash_sets = {p.crashed for p in fps.patterns}
    if any(len(c) > k for c in crash_sets):
        return False
    for size in range(k + 1):
        for subset in combinations(range(1, n + 1), size):
            if frozenset(subset) not in crash_sets:
                return False
    return True
