"""Seeded Monte Carlo simulation of SARPZF and DARPZF.

Trial ``i`` of a run with seed ``s`` draws from a Philox stream keyed by
``(s, i)``, so any subset of trials can be replayed in any order or process.
Each round consumes n uniforms for phase 1 (entry w decides white vertex w)
and, unless DARPZF just turned every vertex blue, n uniforms for phase 2.
The numba kernel and the pure-Python :func:`run_round` consume the stream in
exactly the same way and agree bit for bit.
"""
from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numba
import numpy as np

from .chain import Variant, as_variant, check_p
from .errors import DomainError
from .graph import Graph

DIED_OUT, FULLY_FORCED, CENSORED = 0, 1, 2
OUTCOMES = ("died_out", "fully_forced", "censored")
_NEED_MORE = 3
_MASK64 = (1 << 64) - 1


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent, order-free stream for one trial."""
    return np.random.Generator(np.random.Philox(key=((trial_index & _MASK64) << 64) | (seed & _MASK64)))


class _StreamPool:
    """Reuses one Philox object and rekeys it per trial; same streams as :func:`trial_rng`."""

    def __init__(self):
        self.bitgen = np.random.Philox(0)
        self.gen = np.random.Generator(self.bitgen)
        self._state = self.bitgen.state

    def rekey(self, seed: int, trial_index: int) -> np.random.Generator:
        st = self._state
        st["state"] = {"counter": np.zeros(4, dtype=np.uint64),
                       "key": np.array([seed & _MASK64, trial_index & _MASK64], dtype=np.uint64)}
        st["buffer"] = np.zeros(4, dtype=np.uint64)
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self.bitgen.state = st
        return self.gen


@dataclass(frozen=True)
class SimConfig:
    graph: Graph
    initial_blue: frozenset
    p: float
    variant: Variant
    trials: int
    max_rounds: int = 10 ** 6
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "initial_blue", frozenset(int(v) for v in self.initial_blue))
        object.__setattr__(self, "variant", as_variant(self.variant))
        object.__setattr__(self, "p", check_p(self.p))
        if not self.initial_blue:
            raise DomainError("initial blue set must be nonempty")
        if not all(0 <= v < self.graph.n for v in self.initial_blue):
            raise DomainError("initial blue set has vertices outside the graph")
        if self.trials < 1:
            raise DomainError("trials must be positive")
        if self.max_rounds < 1:
            raise DomainError("max_rounds must be positive")
        if not 0 <= self.seed <= _MASK64:
            raise DomainError("seed must be an unsigned 64-bit integer")


def run_round(graph: Graph, blue: Iterable[int], p: float, variant, rng: np.random.Generator
              ) -> frozenset:
    """Apply one RPZF round to the blue set and return the new blue set."""
    blue = frozenset(blue)
    variant = as_variant(variant)
    if not blue:
        return blue
    n = graph.n
    adj = graph.adjacency
    ratio = {x: (len(adj[x] & blue) + 1) / len(adj[x]) for x in blue}
    u = rng.random(n)
    after = set(blue)
    for w in range(n):
        if w in blue:
            continue
        escape = 1.0
        for x in sorted(adj[w]):
            if x in blue:
                escape *= 1.0 - ratio[x]
        if u[w] < 1.0 - escape:
            after.add(w)
    if variant is Variant.DARPZF and len(after) == n:
        return frozenset(after)
    v = rng.random(n)
    return frozenset(x for x in after if not v[x] < p)


@numba.njit(cache=True)
def _advance(indptr, indices, blue, p, darpzf, u, pos, rounds, max_rounds):
    n = blue.shape[0]
    ratio = np.zeros(n)
    after = np.zeros(n, dtype=np.uint8)
    while True:
        nb = 0
        for v in range(n):
            nb += blue[v]
        if nb == 0:
            return DIED_OUT, pos, rounds
        if darpzf and nb == n:
            return FULLY_FORCED, pos, rounds
        if rounds >= max_rounds:
            return CENSORED, pos, rounds
        if pos + 2 * n > u.shape[0]:
            return _NEED_MORE, pos, rounds
        for x in range(n):
            if blue[x]:
                cnt = 0
                for k in range(indptr[x], indptr[x + 1]):
                    cnt += blue[indices[k]]
                ratio[x] = (cnt + 1) / (indptr[x + 1] - indptr[x])
        total = 0
        for w in range(n):
            if blue[w]:
                after[w] = 1
            else:
                escape = 1.0
                for k in range(indptr[w], indptr[w + 1]):
                    x = indices[k]
                    if blue[x]:
                        escape *= 1.0 - ratio[x]
                after[w] = 1 if u[pos + w] < 1.0 - escape else 0
            total += after[w]
        pos += n
        rounds += 1
        if darpzf and total == n:
            for v in range(n):
                blue[v] = 1
            continue
        for v in range(n):
            blue[v] = 1 if (after[v] and not u[pos + v] < p) else 0
        pos += n


class _Runner:
    def __init__(self, config: SimConfig):
        self.config = config
        g = config.graph
        self.indptr, self.indices = g.csr
        self.init = np.zeros(g.n, dtype=np.uint8)
        self.init[list(config.initial_blue)] = 1
        self.darpzf = config.variant is Variant.DARPZF
        self.block = 32 * g.n
        self.streams = _StreamPool()

    def trial(self, trial_index: int) -> tuple[int, int]:
        c = self.config
        rng = self.streams.rekey(c.seed, trial_index)
        blue = self.init.copy()
        u = rng.random(self.block)
        pos = rounds = 0
        grow = self.block
        while True:
            status, pos, rounds = _advance(self.indptr, self.indices, blue, c.p, self.darpzf,
                                           u, pos, rounds, c.max_rounds)
            if status != _NEED_MORE:
                return rounds, status
            grow = min(grow * 2, 1 << 22)
            u = np.concatenate([u[pos:], rng.random(grow)])
            pos = 0

    def trials(self, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
        rounds = np.empty(stop - start, dtype=np.int64)
        outcomes = np.empty(stop - start, dtype=np.int8)
        for k, i in enumerate(range(start, stop)):
            rounds[k], outcomes[k] = self.trial(i)
        return rounds, outcomes


def run_trial(config: SimConfig, trial_index: int, engine: str = "numba") -> tuple[int | None, str]:
    """Run one trial; returns (absorption round or None if censored, outcome name)."""
    if engine == "python":
        rounds, status = _python_trial(config, trial_index)
    elif engine == "numba":
        rounds, status = _Runner(config).trial(trial_index)
    else:
        raise DomainError(f"unknown engine {engine!r}")
    return (None if status == CENSORED else rounds), OUTCOMES[status]


def _python_trial(config: SimConfig, trial_index: int) -> tuple[int, int]:
    rng = trial_rng(config.seed, trial_index)
    blue = config.initial_blue
    n = config.graph.n
    rounds = 0
    while True:
        if not blue:
            return rounds, DIED_OUT
        if config.variant is Variant.DARPZF and len(blue) == n:
            return rounds, FULLY_FORCED
        if rounds >= config.max_rounds:
            return rounds, CENSORED
        blue = run_round(config.graph, blue, config.p, config.variant, rng)
        rounds += 1


def _chunk(args):
    config, start, stop = args
    return _Runner(config).trials(start, stop)


@dataclass(frozen=True, eq=False)
class SimResult:
    config: SimConfig
    rounds: np.ndarray      # rounds until absorption; for censored trials the round cap
    outcomes: np.ndarray    # codes DIED_OUT / FULLY_FORCED / CENSORED

    @property
    def trials(self) -> int:
        return int(self.outcomes.size)

    def _count(self, code) -> int:
        return int(np.count_nonzero(self.outcomes == code))

    @property
    def censored_count(self) -> int:
        return self._count(CENSORED)

    @property
    def die_out_fraction(self) -> float:
        return self._count(DIED_OUT) / self.trials

    @property
    def fully_forced_fraction(self) -> float:
        return self._count(FULLY_FORCED) / self.trials

    @property
    def se_die_out(self) -> float:
        return _se(self.outcomes == DIED_OUT)

    @property
    def se_fully_forced(self) -> float:
        return _se(self.outcomes == FULLY_FORCED)

    @property
    def absorption_times(self) -> np.ndarray:
        return self.rounds[self.outcomes != CENSORED]

    @property
    def mean_absorption_time(self) -> float:
        t = self.absorption_times
        return float(t.mean()) if t.size else math.nan

    @property
    def se_absorption_time(self) -> float:
        return _se(self.absorption_times)

    columns = ("p", "die_out_fraction", "se_die_out", "mean_abs_time", "se_abs_time",
               "censored_count", "trials", "seed")

    def record(self) -> dict:
        return {"p": self.config.p, "die_out_fraction": self.die_out_fraction,
                "se_die_out": self.se_die_out, "mean_abs_time": self.mean_absorption_time,
                "se_abs_time": self.se_absorption_time, "censored_count": self.censored_count,
                "trials": self.trials, "seed": self.config.seed}

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        if header:
            buf.write(",".join(self.columns) + "\n")
        rec = self.record()
        buf.write(",".join(repr(rec[c]) for c in self.columns) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        rec = self.record()
        rec["fully_forced_fraction"] = self.fully_forced_fraction
        rec["variant"] = self.config.variant.value
        return json.dumps(rec)


def _se(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        return 0.0 if x.size else math.nan
    return float(x.std(ddof=1) / math.sqrt(x.size))


def estimate(config: SimConfig, workers: int = 1) -> SimResult:
    """Run ``config.trials`` trials; the result does not depend on ``workers``."""
    if workers <= 1 or config.trials < 2 * workers:
        rounds, outcomes = _Runner(config).trials(0, config.trials)
        return SimResult(config, rounds, outcomes)
    bounds = np.linspace(0, config.trials, workers + 1).astype(int)
    jobs = [(config, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(workers) as pool:
        parts = list(pool.map(_chunk, jobs))
    return SimResult(config, np.concatenate([r for r, _ in parts]),
                     np.concatenate([o for _, o in parts]))


def blue_fraction_trajectory(config: SimConfig, horizon: int) -> np.ndarray:
    """Monte Carlo mean fraction of blue vertices after rounds 0..horizon."""
    n = config.graph.n
    acc = np.zeros(horizon + 1)
    for i in range(config.trials):
        rng = trial_rng(config.seed, i)
        blue = config.initial_blue
        acc[0] += len(blue)
        for t in range(1, horizon + 1):
            blue = run_round(config.graph, blue, config.p, config.variant, rng)
            acc[t] += len(blue)
    return acc / (config.trials * n)
