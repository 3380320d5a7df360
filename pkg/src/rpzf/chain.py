"""Forcing, reversion and RPZF transition matrices.

One round is phase 1 (probabilistic zero forcing against the round-start blue
set) followed by phase 2 (each blue vertex turns white with probability p), so
the transition matrix factors as M = F R.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import TextIO

import numpy as np

from ._numerics import binom_pmf, thinning_matrix
from .errors import ConsistencyError, DomainError, IncompatibilityError, NumericalError
from .graph import Graph
from .statespace import FULL, StateSpace, as_mask

CONSTRUCTION_TOL = 1e-10


class Variant(str, Enum):
    SARPZF = "sarpzf"
    DARPZF = "darpzf"


def as_variant(v) -> Variant:
    try:
        return Variant(str(getattr(v, "value", v)).lower())
    except ValueError:
        raise DomainError(f"unknown variant {v!r}; use sarpzf or darpzf") from None


def check_p(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"reversion probability must lie in (0, 1), got {p}")
    return p


def escape_probability(g: Graph, blue, w: int) -> float:
    """Probability that white vertex ``w`` is not forced by the blue set."""
    mask = as_mask(blue)
    if (mask >> w) & 1:
        raise DomainError(f"vertex {w} is already blue")
    nbr = g.neighbor_masks
    prod = 1.0
    for x in sorted(g.adjacency[w]):
        if (mask >> x) & 1:
            ratio = ((nbr[x] & mask).bit_count() + 1) / len(g.adjacency[x])
            factor = 1.0 - ratio
            assert 0.0 <= factor <= 1.0
            prod *= factor
    return prod


def force_probability(g: Graph, blue, w: int) -> float:
    """1 - prod over blue neighbors x of w of (1 - |N[x] & B| / deg x)."""
    return 1.0 - escape_probability(g, blue, w)


def _check_compatible(g: Graph, ss: StateSpace):
    if g.n != ss.n:
        raise IncompatibilityError(f"graph has {g.n} vertices, state space has {ss.n}")
    if not ss.collapsed:
        return
    # Lumpability needs every permutation inside a part to be an automorphism:
    # each part is a clique or independent set, and parts are fully joined or unjoined.
    adj = g.adjacency
    for a, pa in enumerate(ss.parts):
        inside = {len(adj[v] & set(pa)) for v in pa}
        if inside not in ({0}, {len(pa) - 1}):
            raise IncompatibilityError(f"part {a} is neither a clique nor independent")
        for b, pb in enumerate(ss.parts):
            if b <= a:
                continue
            joined = {len(adj[v] & set(pb)) for v in pa}
            if joined not in ({0}, {len(pb)}):
                raise IncompatibilityError(f"parts {a} and {b} are partially joined")


def build_forcing(g: Graph, ss: StateSpace) -> np.ndarray:
    """Phase-1 matrix F; row i is the distribution of the blue set after forcing from S_i."""
    _check_compatible(g, ss)
    if ss.kind == FULL:
        return _forcing_full(g, ss)
    return _forcing_collapsed(g, ss)


def _forcing_full(g: Graph, ss: StateSpace) -> np.ndarray:
    size = ss.size
    F = np.zeros((size, size))
    index = ss._index
    full = (1 << g.n) - 1
    for i, mask in enumerate(ss.states):
        if mask == 0:
            F[i, i] = 1.0
            continue
        masks = np.array([mask], dtype=np.int64)
        probs = np.array([1.0])
        for w in range(g.n):
            if (mask >> w) & 1:
                continue
            esc = escape_probability(g, mask, w)
            masks = np.concatenate([masks, masks | (1 << w)])
            probs = np.concatenate([probs * esc, probs * (1.0 - esc)])
        assert masks.max() <= full
        F[i, index[masks]] = probs
    return F


def _forcing_collapsed(g: Graph, ss: StateSpace) -> np.ndarray:
    size = ss.size
    F = np.zeros((size, size))
    for i, desc in enumerate(ss.states):
        rep = ss.representative(i)
        if rep == 0:
            F[i, i] = 1.0
            continue
        per_part = []
        for part, c in zip(ss.parts, desc):
            white = len(part) - c
            if white == 0:
                per_part.append(np.array([1.0]))
                continue
            esc = escape_probability(g, rep, part[c])
            per_part.append(binom_pmf(white, 1.0 - esc, esc))
        for forced in itertools.product(*(range(len(d)) for d in per_part)):
            prob = 1.0
            for d, f in zip(per_part, forced):
                prob *= d[f]
            if prob:
                F[i, ss.index_of(tuple(c + f for c, f in zip(desc, forced)))] += prob
    return F


def build_reversion(ss: StateSpace, p: float, variant) -> np.ndarray:
    """Phase-2 matrix R: every blue vertex independently turns white with probability p."""
    p = check_p(p)
    variant = as_variant(variant)
    if ss.kind == FULL:
        R = _reversion_full(ss, p)
    else:
        R = np.ones((ss.size, ss.size))
        descs = np.array(ss.states, dtype=np.int64)
        for a, part in enumerate(ss.parts):
            t = thinning_matrix(len(part), p)
            R *= t[descs[:, a][:, None], descs[:, a][None, :]]
    if variant is Variant.DARPZF:
        R[ss.s, :] = 0.0
        R[ss.s, ss.s] = 1.0
    return R


def _reversion_full(ss: StateSpace, p: float) -> np.ndarray:
    size = ss.size
    R = np.zeros((size, size))
    index = ss._index
    for i, mask in enumerate(ss.states):
        masks = np.array([mask], dtype=np.int64)
        probs = np.array([1.0])
        for v in range(ss.n):
            if (mask >> v) & 1:
                masks = np.concatenate([masks, masks & ~(1 << v)])
                probs = np.concatenate([probs * (1.0 - p), probs * p])
        R[i, index[masks]] = probs
    return R


@dataclass(frozen=True, eq=False)
class TransitionBundle:
    variant: Variant
    p: float
    space: StateSpace
    F: np.ndarray
    R: np.ndarray
    M: np.ndarray

    @property
    def transient(self) -> np.ndarray:
        """Indices of transient states (1..s for SARPZF, 1..s-1 for DARPZF)."""
        s = self.space.s
        stop = s + 1 if self.variant is Variant.SARPZF else s
        return np.arange(1, stop)

    @property
    def Q(self) -> np.ndarray:
        t = self.transient
        return self.M[np.ix_(t, t)]

    @property
    def r(self) -> np.ndarray | None:
        if self.variant is not Variant.SARPZF:
            return None
        return self.M[1:, 0].copy()

    @property
    def a1(self) -> np.ndarray | None:
        if self.variant is not Variant.DARPZF:
            return None
        return self.M[1:-1, 0].copy()

    @property
    def a2(self) -> np.ndarray | None:
        if self.variant is not Variant.DARPZF:
            return None
        return self.M[1:-1, -1].copy()

    @property
    def exit_mass(self) -> np.ndarray:
        """One-step probability of absorption from each transient state."""
        if self.variant is Variant.SARPZF:
            return self.r
        return self.a1 + self.a2

    def q_norm(self) -> float:
        Q = self.Q
        return float(np.abs(Q).sum(axis=1).max()) if Q.size else 0.0


def _check_stochastic(name: str, A: np.ndarray, tol: float):
    dev = np.abs(A.sum(axis=1) - 1.0)
    if dev.size and dev.max() > tol:
        i = int(dev.argmax())
        raise ConsistencyError(f"{name} row {i} sums to {A[i].sum()!r}")
    if A.size and (A.min() < -tol or A.max() > 1.0 + tol):
        raise ConsistencyError(f"{name} has entries outside [0, 1]")


def build_bundle(g: Graph, ss: StateSpace, p: float, variant, forcing: np.ndarray | None = None
                 ) -> TransitionBundle:
    """Build F, R and M = F R, then verify the structural invariants.

    ``forcing`` lets callers reuse an F built earlier for the same graph and space,
    since F does not depend on p.
    """
    p = check_p(p)
    variant = as_variant(variant)
    F = build_forcing(g, ss) if forcing is None else forcing
    if F.shape != (ss.size, ss.size):
        raise IncompatibilityError("forcing matrix shape does not match state space")
    R = build_reversion(ss, p, variant)
    M = F @ R
    for name, A in (("F", F), ("R", R), ("M", M)):
        _check_stochastic(name, A, CONSTRUCTION_TOL)
    s = ss.s
    if M[0, 0] != 1.0:
        raise ConsistencyError("all-white state is not absorbing")
    if variant is Variant.DARPZF and abs(M[s, s] - 1.0) > CONSTRUCTION_TOL:
        raise ConsistencyError("all-blue state is not absorbing under DARPZF")
    bundle = TransitionBundle(variant, p, ss, F, R, M)
    if np.any(bundle.exit_mass <= 0.0):
        raise NumericalError("a transient state has no representable one-step absorption mass")
    return bundle


def step_distribution(bundle: TransitionBundle, dist) -> np.ndarray:
    dist = np.asarray(dist, dtype=np.float64)
    if dist.shape != (bundle.space.size,):
        raise IncompatibilityError(
            f"distribution has shape {dist.shape}, expected ({bundle.space.size},)")
    return dist @ bundle.M


def write_matrix_csv(A: np.ndarray, fh: TextIO):
    """Row-major CSV at full round-trip precision."""
    for row in np.atleast_2d(A):
        fh.write(",".join("%.17g" % x for x in row))
        fh.write("\n")
