"""Properly ordered state spaces: full colorings or symmetry-collapsed count classes.

A coloring is an ``int`` bitmask whose bit ``v`` is set when vertex ``v`` is
blue. Collapsed spaces describe a state by the number of blue vertices in each
part of a vertex partition whose parts are interchangeable under graph
automorphisms (the whole vertex set for K_n, the two sides of K_{m,n}, the
universal vertex and the leaves of a star).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DomainError, SizeError

FULL_CAP = 14

FULL = "full"
COMPLETE = "collapsed_complete"
STAR = "collapsed_star"
BIPARTITE = "collapsed_bipartite"


def as_mask(coloring) -> int:
    """Accept a bitmask or an iterable of blue vertices."""
    if isinstance(coloring, (int, np.integer)):
        return int(coloring)
    mask = 0
    for v in coloring:
        mask |= 1 << int(v)
    return mask


def vertices_of(mask: int) -> list[int]:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return out


@dataclass(frozen=True, eq=False)
class StateSpace:
    n: int
    kind: str
    states: tuple
    blue_count: np.ndarray
    parts: tuple[tuple[int, ...], ...] = ()
    _index: dict | np.ndarray = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def s(self) -> int:
        """Index of the all-blue state."""
        return len(self.states) - 1

    @property
    def collapsed(self) -> bool:
        return self.kind != FULL

    def counts(self, coloring) -> tuple[int, ...]:
        mask = as_mask(coloring)
        return tuple(sum((mask >> v) & 1 for v in part) for part in self.parts)

    def classify(self, coloring) -> int:
        mask = as_mask(coloring)
        if mask >> self.n:
            raise DomainError(f"coloring {mask:#x} uses vertices outside [0, {self.n})")
        if self.kind == FULL:
            return int(self._index[mask])
        return self._index[self.counts(mask)]

    def index_of(self, descriptor) -> int:
        """State index of a descriptor (bitmask for full spaces, count tuple otherwise)."""
        if self.kind == FULL:
            return int(self._index[int(descriptor)])
        if isinstance(descriptor, (int, np.integer)) and len(self.parts) == 1:
            descriptor = (int(descriptor),)
        try:
            return self._index[tuple(int(x) for x in descriptor)]
        except KeyError:
            raise DomainError(f"no state with descriptor {descriptor!r}") from None

    def representative(self, i: int) -> int:
        """A coloring (bitmask) belonging to state ``i``."""
        desc = self.states[i]
        if self.kind == FULL:
            return desc
        mask = 0
        for part, c in zip(self.parts, desc):
            for v in part[:c]:
                mask |= 1 << v
        return mask

    def label(self, i: int) -> str:
        desc = self.states[i]
        if self.kind == FULL:
            return "{" + ",".join(map(str, vertices_of(desc))) + "}"
        return "(" + ",".join(map(str, desc)) + ")"


def enumerate_full(g, cap: int | None = None) -> StateSpace:
    """All 2^n colorings sorted by blue count, ties broken by bitmask value."""
    cap = FULL_CAP if cap is None else cap
    n = g.n
    if n > cap:
        raise SizeError(f"full enumeration of {n} vertices exceeds cap {cap}")
    masks = np.arange(1 << n, dtype=np.int64)
    counts = np.zeros_like(masks)
    for v in range(n):
        counts += (masks >> v) & 1
    order = np.lexsort((masks, counts))
    states = tuple(int(m) for m in masks[order])
    index = np.empty(1 << n, dtype=np.int64)
    index[masks[order]] = np.arange(1 << n)
    return StateSpace(n, FULL, states, counts[order].copy(), (), index)


def _collapsed(n: int, parts, kind: str) -> StateSpace:
    ranges = [range(len(p) + 1) for p in parts]
    descs = sorted(itertools.product(*ranges), key=lambda d: (sum(d), d))
    index = {d: i for i, d in enumerate(descs)}
    counts = np.array([sum(d) for d in descs], dtype=np.int64)
    return StateSpace(n, kind, tuple(descs), counts, tuple(tuple(p) for p in parts), index)


def collapsed_complete(n: int) -> StateSpace:
    if n < 2:
        raise DomainError(f"collapsed complete space needs n >= 2, got {n}")
    return _collapsed(n, [range(n)], COMPLETE)


def collapsed_bipartite(m: int, n: int) -> StateSpace:
    """States (b_U, b_V) for K_{m,n} labeled as in ``family('complete_bipartite', m, n)``."""
    if m < 1 or n < 1:
        raise DomainError(f"collapsed bipartite space needs m, n >= 1, got {m}, {n}")
    return _collapsed(m + n, [range(m), range(m, m + n)], BIPARTITE)


def collapsed_star(n: int) -> StateSpace:
    """States (universal blue, #blue leaves) with vertex 0 universal."""
    if n < 3:
        raise DomainError(f"collapsed star space needs n >= 3, got {n}")
    return _collapsed(n, [range(1), range(1, n)], STAR)


def collapsed_for(kind: str, params: Iterable[int]) -> StateSpace | None:
    """Collapsed space matching a graph family, or None when the family has none."""
    params = tuple(params)
    if kind == "complete":
        return collapsed_complete(*params)
    if kind == "star" and params[0] >= 3:
        return collapsed_star(*params)
    if kind == "complete_bipartite":
        return collapsed_bipartite(*params)
    return None
