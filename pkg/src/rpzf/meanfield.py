"""Discrete-time SIS mean-field recursions and the SARPZF analogue.

Every model tracks per-vertex infection (blue) probabilities.  The four
classical models share q_v = prod_{x in N(v)} (1 - beta p_x), the probability
that v escapes infection.  The SARPZF model replaces q_v by the exact
escape probability averaged over all colorings, each coloring weighted by
the product of the current marginals.
"""
from __future__ import annotations

import functools
import io
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, SizeError
from .graph import Graph

MODELS = ("wang", "gomez", "ahn", "pare", "sarpzf")
SARPZF_CAP = 12
DRIFT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MeanFieldState:
    probs: np.ndarray
    t: int
    model: str
    beta: float
    p: float
    drift: float = 0.0   # largest excursion outside [0, 1] removed by clamping so far

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 1:
            raise DomainError("probs must be a vector")
        if probs.size and (probs.min() < 0.0 or probs.max() > 1.0):
            raise DomainError("probabilities must lie in [0, 1]")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        _check_params(self.model, self.beta, self.p)


def _check_params(model: str, beta: float, p: float):
    if model not in MODELS:
        raise DomainError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    if model == "sarpzf":
        if not 0.0 < p < 1.0:
            raise DomainError(f"sarpzf needs p in (0, 1), got {p}")
        return
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")


def initial_state(model: str, n: int, blue=(), beta: float = 0.0, p: float = 0.5,
                  probs=None) -> MeanFieldState:
    """Start from explicit probabilities or from a deterministic blue set."""
    if probs is None:
        probs = np.zeros(n)
        probs[list(blue)] = 1.0
    elif len(probs) != n:
        raise DomainError(f"expected {n} probabilities, got {len(probs)}")
    return MeanFieldState(probs, 0, model, float(beta), float(p))


def neighbor_escape(graph: Graph, probs: np.ndarray, beta: float) -> np.ndarray:
    """q_v = prod over neighbors x of (1 - beta p_x)."""
    factors = 1.0 - beta * np.asarray(probs)
    return np.array([np.prod(factors[list(graph.adjacency[v])]) for v in range(graph.n)])


@functools.lru_cache(maxsize=8)
def _coloring_escape_table(graph: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Bits of every coloring and E[mask, v] = P[coloring does not force v]."""
    n = graph.n
    masks = np.arange(1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(np.float64)
    A = graph.adjacency_matrix.astype(np.float64)
    # A blue x whose neighbors are all blue gives (deg + 1)/deg; that only happens in
    # colorings where v is already blue, and capping at 1 keeps every factor a probability.
    ratio = np.minimum((bits @ A + 1.0) / graph.degrees, 1.0)
    factor = np.where(bits > 0, 1.0 - ratio, 1.0)
    E = np.empty((1 << n, n))
    for v in range(n):
        E[:, v] = np.prod(factor[:, sorted(graph.adjacency[v])], axis=1)
    bits.setflags(write=False)
    E.setflags(write=False)
    return bits, E


def sarpzf_escape(graph: Graph, probs: np.ndarray, cap: int = SARPZF_CAP) -> np.ndarray:
    """Total-probability q_v, summing over all 2^n colorings."""
    if graph.n > cap:
        raise SizeError(f"sarpzf mean-field sums 2^n colorings; n={graph.n} exceeds cap {cap}")
    bits, E = _coloring_escape_table(graph)
    probs = np.asarray(probs)
    weights = np.prod(np.where(bits > 0, probs, 1.0 - probs), axis=1)
    live = weights > 0.0
    return weights[live] @ E[live]


def mf_step(state: MeanFieldState, graph: Graph, cap: int = SARPZF_CAP) -> MeanFieldState:
    if state.probs.size != graph.n:
        raise DomainError(f"state has {state.probs.size} entries, graph has {graph.n} vertices")
    pv, p, beta = state.probs, state.p, state.beta
    model = state.model
    if model == "sarpzf":
        q = sarpzf_escape(graph, pv, cap)
        nxt = (1 - p) * pv + (1 - p) * (1 - pv) * (1 - q)
    elif model == "pare":
        if beta * graph.degrees.max() > 1.0:
            raise DomainError("pare model needs beta * max degree <= 1 to stay in [0, 1]")
        total = graph.adjacency_matrix @ pv
        nxt = (1 - p) * pv + (1 - pv) * beta * total
    else:
        q = neighbor_escape(graph, pv, beta)
        if model == "wang":
            healthy = (1 - pv) * q + p * pv * q + 0.5 * p * pv * (1 - q)
            nxt = 1.0 - healthy
        elif model == "gomez":
            nxt = (1 - p) * pv + (1 - q) * (1 - pv) + p * (1 - q) * pv
        else:  # ahn
            nxt = (1 - p) * pv + (1 - pv) * (1 - q)
    drift = float(max(0.0, -nxt.min(), nxt.max() - 1.0)) if nxt.size else 0.0
    if drift > DRIFT_TOL:
        warnings.warn(f"{model} step left [0, 1] by {drift:.3g}; clamping", RuntimeWarning,
                      stacklevel=2)
    nxt = np.clip(nxt, 0.0, 1.0)
    return replace(state, probs=nxt, t=state.t + 1, drift=max(state.drift, drift))


def infection_density(state: MeanFieldState) -> float:
    return float(state.probs.mean())


def mf_run(state: MeanFieldState, graph: Graph, horizon: int, cap: int = SARPZF_CAP
           ) -> list[MeanFieldState]:
    if horizon < 0:
        raise DomainError("horizon must be nonnegative")
    states = [state]
    for _ in range(horizon):
        states.append(mf_step(states[-1], graph, cap))
    return states


def mf_trajectory(model: str, graph: Graph, initial, beta: float, p: float, horizon: int
                  ) -> list[tuple[int, float]]:
    """(t, rho_t) for t = 0..horizon; ``initial`` is a blue vertex set or a probability vector."""
    if isinstance(initial, (set, frozenset)):
        start = initial_state(model, graph.n, blue=initial, beta=beta, p=p)
    else:
        start = initial_state(model, graph.n, beta=beta, p=p, probs=initial)
    return [(s.t, infection_density(s)) for s in mf_run(start, graph, horizon)]


def trajectory_csv(states: list[MeanFieldState], per_vertex: bool = False) -> str:
    buf = io.StringIO()
    cols = ["t", "rho"]
    if per_vertex and states:
        cols += [f"p_{v}" for v in range(states[0].probs.size)]
    buf.write(",".join(cols) + "\n")
    for s in states:
        row = [str(s.t), repr(infection_density(s))]
        if per_vertex:
            row += [repr(float(x)) for x in s.probs]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
