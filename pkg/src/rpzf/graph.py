"""Simple connected undirected graphs on vertices 0..n-1."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import DomainError, ParseError

FAMILIES = ("complete", "path", "cycle", "star", "complete_bipartite")


@dataclass(frozen=True)
class Graph:
    """Immutable adjacency-set graph.

    Construction checks symmetry, absence of self-loops and connectivity.
    """

    n: int
    adjacency: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"vertex count must be positive, got {self.n}")
        if len(self.adjacency) != self.n:
            raise DomainError("adjacency length does not match vertex count")
        for v, nbrs in enumerate(self.adjacency):
            if v in nbrs:
                raise DomainError(f"self-loop at vertex {v}")
            for w in nbrs:
                if not 0 <= w < self.n:
                    raise DomainError(f"neighbor {w} of vertex {v} out of range")
                if v not in self.adjacency[w]:
                    raise DomainError(f"adjacency not symmetric on edge ({v}, {w})")
        if not _connected(self.adjacency):
            raise DomainError("graph is disconnected")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        adj = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise DomainError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise DomainError(f"edge ({u}, {v}) has a vertex outside [0, {n})")
            if v in adj[u]:
                raise DomainError(f"duplicate edge ({u}, {v})")
            adj[u].add(v)
            adj[v].add(u)
        return cls(n, tuple(frozenset(s) for s in adj))

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((u, v) for u in range(self.n) for v in sorted(self.adjacency[u]) if u < v)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        """Bitmask of the open neighborhood of each vertex."""
        return tuple(sum(1 << w for w in nbrs) for nbrs in self.adjacency)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) with each neighbor list sorted ascending."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(self.degrees)
        indices = np.array([w for v in range(self.n) for w in sorted(self.adjacency[v])],
                           dtype=np.int64)
        return indptr, indices

    @cached_property
    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1.0
        return a


def _connected(adjacency) -> bool:
    n = len(adjacency)
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == n


def from_edge_list(text: str) -> Graph:
    """Parse the edge-list format: a vertex count line, then one ``u v`` pair per line.

    Blank lines and lines starting with ``#`` are ignored.
    """
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty edge list: missing vertex count")
    lineno, first = lines[0]
    try:
        n = int(first)
    except ValueError:
        raise ParseError(f"line {lineno}: expected vertex count, got {first!r}") from None
    if n < 1:
        raise DomainError(f"line {lineno}: vertex count must be positive")
    edges = []
    for lineno, ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected two integers, got {ln!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"line {lineno}: expected two integers, got {ln!r}") from None
        edges.append((u, v))
    return Graph.from_edges(n, edges)


def family(kind: str, *params: int) -> Graph:
    """Standard labeled graph families.

    ``star`` puts the universal vertex at 0; ``complete_bipartite(m, n)`` uses
    part U = [0, m) and part V = [m, m + n).
    """
    if kind == "complete":
        (n,) = _arity(kind, params, 1)
        _need(n >= 2, f"complete graph needs n >= 2, got {n}")
        return Graph.from_edges(n, ((u, v) for u in range(n) for v in range(u + 1, n)))
    if kind == "path":
        (n,) = _arity(kind, params, 1)
        _need(n >= 2, f"path needs n >= 2, got {n}")
        return Graph.from_edges(n, ((i, i + 1) for i in range(n - 1)))
    if kind == "cycle":
        (n,) = _arity(kind, params, 1)
        _need(n >= 3, f"cycle needs n >= 3, got {n}")
        return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)] + [(n - 1, 0)])
    if kind == "star":
        (n,) = _arity(kind, params, 1)
        _need(n >= 2, f"star needs n >= 2, got {n}")
        return Graph.from_edges(n, ((0, i) for i in range(1, n)))
    if kind == "complete_bipartite":
        m, n = _arity(kind, params, 2)
        _need(m >= 1 and n >= 1, f"complete bipartite needs m, n >= 1, got {m}, {n}")
        return Graph.from_edges(m + n, ((u, m + v) for u in range(m) for v in range(n)))
    raise DomainError(f"unknown graph family {kind!r}; choose from {', '.join(FAMILIES)}")


def _arity(kind, params, k):
    if len(params) != k:
        raise DomainError(f"{kind} takes {k} parameter(s), got {len(params)}")
    return [int(x) for x in params]


def _need(cond, msg):
    if not cond:
        raise DomainError(msg)


def parse_family(spec: str) -> tuple[str, tuple[int, ...]]:
    """Split ``"complete_bipartite:16,16"`` into ``("complete_bipartite", (16, 16))``."""
    name, _, rest = spec.partition(":")
    name = {"bipartite": "complete_bipartite", "K": "complete"}.get(name, name)
    if not rest:
        raise ParseError(f"family spec {spec!r} needs parameters, e.g. complete:5")
    try:
        params = tuple(int(x) for x in rest.split(","))
    except ValueError:
        raise ParseError(f"bad family parameters in {spec!r}") from None
    return name, params
