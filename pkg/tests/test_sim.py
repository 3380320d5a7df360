from __future__ import annotations

import math

import numpy as np
import pytest

from rpzf.analysis import analyze
from rpzf.chain import build_bundle, step_distribution
from rpzf.errors import DomainError
from rpzf.graph import family
from rpzf.sim import (CENSORED, DIED_OUT, FULLY_FORCED, SimConfig, SimResult, _StreamPool,
                      blue_fraction_trajectory, estimate, run_round, run_trial, trial_rng)
from rpzf.statespace import collapsed_complete, enumerate_full


def cfg(kind, params, blue=(0,), p=0.5, variant="darpzf", trials=1000, **kw):
    return SimConfig(family(kind, *params), frozenset(blue), p, variant, trials, **kw)


def test_run_round_empty_draws_nothing():
    rng = trial_rng(1, 1)
    twin = trial_rng(1, 1)
    assert run_round(family("complete", 4), set(), 0.5, "sarpzf", rng) == frozenset()
    assert rng.random() == twin.random()


def test_run_round_dual_stop():
    g = family("complete", 2)
    rng = trial_rng(3, 0)
    for _ in range(50):
        # one blue end of K_2 forces the other surely, so reversion is skipped
        assert run_round(g, {0}, 0.99, "darpzf", rng) == frozenset({0, 1})


def test_run_round_one_step_law():
    g = family("complete", 3)
    bundle = build_bundle(g, collapsed_complete(3), 0.5, "sarpzf")
    exact = step_distribution(bundle, np.eye(4)[1])
    rng = np.random.default_rng(2024)
    trials = 100_000
    counts = np.zeros(4)
    for _ in range(trials):
        counts[len(run_round(g, {0}, 0.5, "sarpzf", rng))] += 1
    freq = counts / trials
    se = np.sqrt(exact * (1 - exact) / trials)
    assert np.all(np.abs(freq - exact) <= 3 * se)


def test_stream_pool_matches_fresh_generator():
    pool = _StreamPool()
    for seed, idx in [(0, 0), (12345, 7), (2 ** 64 - 1, 2 ** 40 + 3)]:
        pool.rekey(99, 99).random(5)          # leave stale buffered state behind
        a = pool.rekey(seed, idx).random(17)
        b = trial_rng(seed, idx).random(17)
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("kind, params, blue", [
    ("complete", (6,), (0,)), ("cycle", (7,), (0, 3)), ("star", (6,), (2,)),
    ("path", (6,), (5,)), ("complete_bipartite", (2, 3), (0, 4)),
])
@pytest.mark.parametrize("variant", ["sarpzf", "darpzf"])
def test_kernel_matches_python(kind, params, blue, variant):
    c = cfg(kind, params, blue, p=0.35, variant=variant, trials=1, seed=11)
    for i in range(150):
        assert run_trial(c, i) == run_trial(c, i, engine="python")


def test_initial_absorbing_state():
    c = cfg("complete", (4,), blue=range(4), variant="darpzf")
    assert run_trial(c, 0) == (0, "fully_forced")
    assert run_trial(c, 0, engine="python") == (0, "fully_forced")


def test_single_absorption_never_fully_forces():
    res = estimate(cfg("complete", (5,), p=0.2, variant="sarpzf", trials=3000))
    assert res.fully_forced_fraction == 0.0
    assert res.die_out_fraction == 1.0


def test_censoring():
    c = cfg("complete", (8,), p=0.1, variant="sarpzf", trials=200, max_rounds=3)
    res = estimate(c)
    assert res.censored_count > 0
    assert np.all(res.rounds[res.outcomes == CENSORED] == 3)
    assert res.absorption_times.size == res.trials - res.censored_count
    r, outcome = run_trial(c, int(np.flatnonzero(res.outcomes == CENSORED)[0]))
    assert (r, outcome) == (None, "censored")


def test_k8_absorption_time_matches_chain():
    c = cfg("complete", (8,), p=0.3, trials=100_000, seed=5)
    res = estimate(c)
    report = analyze(build_bundle(c.graph, collapsed_complete(8), 0.3, "darpzf"))
    assert abs(res.mean_absorption_time - report.expabs(1)) <= 3 * res.se_absorption_time
    c_die = report.die_out(1)
    assert abs(res.die_out_fraction - c_die) <= 3 * math.sqrt(c_die * (1 - c_die) / c.trials)


@pytest.mark.parametrize("kind, params, blue", [("path", (6,), (2,)), ("cycle", (8,), (0,)),
                                                ("star", (7,), (3,))])
def test_small_graphs_match_chain(kind, params, blue):
    c = cfg(kind, params, blue, p=0.45, trials=40_000, seed=17)
    res = estimate(c)
    ss = enumerate_full(c.graph)
    report = analyze(build_bundle(c.graph, ss, 0.45, "darpzf"))
    i = ss.classify(blue)
    c_die = report.die_out(i)
    assert abs(res.die_out_fraction - c_die) <= 3 * math.sqrt(c_die * (1 - c_die) / c.trials)
    assert abs(res.mean_absorption_time - report.expabs(i)) <= 3 * res.se_absorption_time


def test_determinism_and_workers():
    c = cfg("cycle", (10,), p=0.3, trials=400, seed=2 ** 63 + 5)
    a, b = estimate(c), estimate(c)
    np.testing.assert_array_equal(a.rounds, b.rounds)
    np.testing.assert_array_equal(a.outcomes, b.outcomes)
    assert a.to_csv() == b.to_csv()
    w = estimate(c, workers=2)
    np.testing.assert_array_equal(a.rounds, w.rounds)
    np.testing.assert_array_equal(a.outcomes, w.outcomes)
    # any single trial can be replayed on its own
    for i in (0, 123, 399):
        r, outcome = run_trial(c, i)
        assert r == a.rounds[i] and outcome == ("died_out", "fully_forced")[a.outcomes[i]]


def test_seed_changes_results():
    a = estimate(cfg("cycle", (10,), p=0.3, trials=300, seed=1))
    b = estimate(cfg("cycle", (10,), p=0.3, trials=300, seed=2))
    assert not np.array_equal(a.rounds, b.rounds)


def test_result_aggregates():
    c = cfg("complete", (5,), p=0.5, trials=5)
    res = SimResult(c, np.array([1, 2, 3, 4, 10]),
                    np.array([DIED_OUT, FULLY_FORCED, DIED_OUT, FULLY_FORCED, CENSORED], np.int8))
    assert res.die_out_fraction == 0.4 and res.fully_forced_fraction == 0.4
    assert res.die_out_fraction + res.fully_forced_fraction + res.censored_count / 5 == 1.0
    assert res.mean_absorption_time == 2.5
    assert res.se_absorption_time == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert res.se_die_out == pytest.approx(np.std([1, 0, 1, 0, 0], ddof=1) / math.sqrt(5))
    header, row = res.to_csv().splitlines()
    assert header == "p,die_out_fraction,se_die_out,mean_abs_time,se_abs_time,censored_count,trials,seed"
    assert row.startswith("0.5,0.4,")


def test_monotone_die_out_on_complete():
    ps = [0.2, 0.3, 0.4, 0.5, 0.6]
    res = [estimate(cfg("complete", (6,), p=p, trials=5000, seed=3)) for p in ps]
    for a, b in zip(res, res[1:]):
        assert b.die_out_fraction >= a.die_out_fraction - 3 * math.hypot(a.se_die_out, b.se_die_out)


def test_path_start_position_matters():
    end = estimate(cfg("path", (32,), (0,), p=0.2, trials=4000, seed=8))
    mid = estimate(cfg("path", (32,), (15,), p=0.2, trials=4000, seed=8))
    diff = end.mean_absorption_time - mid.mean_absorption_time
    assert diff > 3 * math.hypot(end.se_absorption_time, mid.se_absorption_time)


@pytest.mark.slow
def test_k32_at_critical_point():
    res = estimate(cfg("complete", (32,), p=0.43715, trials=100_000, seed=1))
    assert abs(res.die_out_fraction - 0.5) <= 3 * 0.5 / math.sqrt(res.trials)


def test_blue_fraction_trajectory():
    c = cfg("complete", (6,), p=0.5, variant="sarpzf", trials=200)
    traj = blue_fraction_trajectory(c, 5)
    assert traj[0] == pytest.approx(1 / 6)
    assert traj.shape == (6,) and np.all((traj >= 0) & (traj <= 1))


@pytest.mark.parametrize("kw", [dict(blue=()), dict(blue=(9,)), dict(p=1.0), dict(trials=0),
                                dict(max_rounds=0), dict(seed=-1), dict(variant="x")])
def test_config_validation(kw):
    with pytest.raises(DomainError):
        cfg("complete", (4,), **kw)


def test_unknown_engine():
    with pytest.raises(DomainError):
        run_trial(cfg("complete", (4,)), 0, engine="gpu")
