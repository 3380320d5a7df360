"""Command-line front end: ``rpzf <command> [flags]``.

Every command writes plot-ready CSV (or JSON) to ``--out`` or stdout.  When
``--out`` is given a run manifest is written next to it as
``<out>.manifest.json``.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze, critical_reversion_probability
from .chain import Variant, as_variant, build_bundle, build_forcing, check_p
from .closedform import EXPECTATION_GAP, FORCE_PROB, kn_one_step_pmf, threshold_sweep
from .errors import DomainError, IncompatibilityError, ParseError, RPZFError
from .graph import Graph, family, from_edge_list, parse_family
from .meanfield import MODELS, SARPZF_CAP, initial_state, mf_run, infection_density
from .sim import SimConfig, estimate
from .statespace import collapsed_for, enumerate_full


# ---------------------------------------------------------------- parsing helpers

def parse_grid(text: str) -> list[float]:
    """``a:b:s`` -> [a, a+s, ..., b], inclusive of b up to 1e-12 rounding."""
    try:
        a, b, s = (float(x) for x in text.split(":"))
    except ValueError:
        raise ParseError(f"grid {text!r} is not of the form start:stop:step") from None
    if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(s)) or s <= 0 or b < a:
        raise ParseError(f"grid {text!r} needs finite start <= stop and step > 0")
    count = math.floor((b - a) / s + 1e-9) + 1
    values = [round(a + i * s, 12) for i in range(count)]
    if abs(values[-1] - b) <= 1e-12:
        values[-1] = b
    return values


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParseError(f"expected a comma-separated list of integers, got {text!r}") from None


def parse_vertices(text: str) -> frozenset:
    try:
        return frozenset(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ParseError(f"expected comma-separated vertex labels, got {text!r}") from None


def load_graph(args) -> tuple[Graph, str | None, tuple]:
    if args.edge_list:
        try:
            text = Path(args.edge_list).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read edge list: {exc}") from None
        return from_edge_list(text), None, ()
    if not args.family:
        raise ParseError("give a graph with --family name:params or --edge-list path")
    kind, params = parse_family(args.family)
    return family(kind, *params), kind, params


def p_values(args) -> list[float]:
    if args.p_grid is not None:
        ps = parse_grid(args.p_grid)
    elif args.p is not None:
        ps = [args.p]
    else:
        raise ParseError("give --p or --p-grid")
    return sorted(check_p(p) for p in ps)


def choose_space(g: Graph, kind, params, mode: str):
    if mode == "full":
        return enumerate_full(g)
    collapsed = collapsed_for(kind, params) if kind else None
    if mode == "collapsed" and collapsed is None:
        raise IncompatibilityError("this graph has no collapsed state space; use --mode full")
    return collapsed if collapsed is not None else enumerate_full(g)


def start_state(ss, args) -> int:
    if args.state is not None:
        if not 0 <= args.state < ss.size:
            raise DomainError(f"state index {args.state} outside 0..{ss.size - 1}")
        return args.state
    return ss.classify(parse_vertices(args.start))


# ---------------------------------------------------------------- output

def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
            else _dt.datetime.now(_dt.timezone.utc))
    return when.isoformat(timespec="seconds")


def manifest(args, seeds=()) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    return {"command": args.command, "params": params, "seeds": list(seeds),
            "version": __version__, "timestamp": timestamp(),
            "outputs": [args.out] if args.out else []}


def emit(args, columns, rows, seeds=(), extra=None):
    """Write rows (sorted on the leading grid key) as CSV or JSON, plus the manifest."""
    rows = sorted(rows, key=lambda r: tuple(_sort_key(r[c]) for c in columns[:2]))
    man = manifest(args, seeds)
    if args.format == "json":
        payload = {"columns": list(columns), "rows": rows, "manifest": man}
        if extra:
            payload.update(extra)
        text = json.dumps(payload, indent=1) + "\n"
    else:
        lines = [",".join(columns)] + [",".join(_cell(r[c]) for c in columns) for r in rows]
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        Path(args.out + ".manifest.json").write_text(json.dumps(man, indent=1) + "\n")
    else:
        sys.stdout.write(text)


def _sort_key(x):
    return (0, x) if isinstance(x, (int, float)) else (1, str(x))


# ---------------------------------------------------------------- commands

def cmd_analyze(args):
    g, kind, params = load_graph(args)
    ss = choose_space(g, kind, params, args.mode)
    F = build_forcing(g, ss)
    only = start_state(ss, args) if (args.state is not None or args.start) else None
    rows = []
    for p in p_values(args):
        report = analyze(build_bundle(g, ss, p, args.variant, forcing=F))
        for rec in report.records():
            if only is None or rec["state_index"] == only:
                rows.append({"p": p, "label": ss.label(rec["state_index"]), **rec})
    if only is not None and not rows:
        raise DomainError(f"state {only} is absorbing, so it has no report row")
    cols = ("p", "state_index", "label", "blue_count", "t_i", "c_die", "c_force")
    emit(args, cols, rows)


def cmd_critical_p(args):
    g, kind, params = load_graph(args)
    ss = choose_space(g, kind, params, args.mode)
    if args.start is None and args.state is None:
        args.start = "0"
    i = start_state(ss, args)
    p_d = critical_reversion_probability(g, ss, i, tol=args.tol, scan=args.scan)
    print(repr(p_d))
    if args.out:
        emit(args, ("state_index", "label", "p_D", "tol"),
             [{"state_index": i, "label": ss.label(i), "p_D": p_d, "tol": args.tol}])


def cmd_simulate(args):
    g, _, _ = load_graph(args)
    blue = parse_vertices(args.start)
    rows = []
    censored = 0
    for p in p_values(args):
        cfg = SimConfig(g, blue, p, as_variant(args.variant), args.trials, args.max_rounds, args.seed)
        res = estimate(cfg, workers=args.workers)
        censored += res.censored_count
        rec = res.record()
        rec["fully_forced_fraction"] = res.fully_forced_fraction
        rec["se_fully_forced"] = res.se_fully_forced
        rows.append(rec)
    if censored:
        print(f"warning: {censored} censored trials; absorption-time means are biased low",
              file=sys.stderr)
    cols = ("p", "die_out_fraction", "se_die_out", "mean_abs_time", "se_abs_time",
            "censored_count", "trials", "seed", "fully_forced_fraction", "se_fully_forced")
    emit(args, cols, rows, seeds=[args.seed])


def cmd_threshold(args):
    sweep = threshold_sweep(args.family, args.metric, parse_int_list(args.n_grid),
                            exponent=args.exponent, p=args.p, offset=args.offset,
                            offset_exponent=args.offset_exponent, bipartite_rule=args.rule)
    rows = [{"n": n, "b_n": "/".join(map(str, b)) if isinstance(b, tuple) else b,
             "metric_value": v} for n, b, v in zip(sweep.n_grid, sweep.b_values, sweep.values)]
    emit(args, ("n", "b_n", "metric_value"), rows,
         extra={"b_rule": sweep.b_rule, "metric": sweep.metric})


def cmd_meanfield(args):
    g, _, _ = load_graph(args)
    start = initial_state(args.model, g.n, blue=parse_vertices(args.start), beta=args.beta,
                          p=args.p)
    states = mf_run(start, g, args.horizon, cap=args.cap)
    rows = []
    for s in states:
        row = {"t": s.t, "rho": infection_density(s)}
        if args.per_vertex:
            row.update({f"p_{v}": float(x) for v, x in enumerate(s.probs)})
        rows.append(row)
    cols = ("t", "rho") + (tuple(f"p_{v}" for v in range(g.n)) if args.per_vertex else ())
    emit(args, cols, rows)


def cmd_pmf(args):
    variant = as_variant(args.variant)
    ks = range(args.n + 1) if args.k is None else [args.k]
    rows = []
    for p in p_values(args):
        for k in ks:
            rows.append({"p": p, "k": k,
                         "pmf": kn_one_step_pmf(args.n, args.b, p, variant, k, formula=args.formula)})
    emit(args, ("p", "k", "pmf"), rows)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", help="output file; a manifest is written to <out>.manifest.json")
    out.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")

    graph = argparse.ArgumentParser(add_help=False)
    src = graph.add_mutually_exclusive_group()
    src.add_argument("--family", help="graph family as name:params, e.g. complete:7, "
                                      "complete_bipartite:16,16, cycle:32, path:32, star:32")
    src.add_argument("--edge-list", help="edge-list file: vertex count, then one 'u v' per line")

    chain = argparse.ArgumentParser(add_help=False)
    chain.add_argument("--variant", choices=[v.value for v in Variant], default="darpzf",
                       help="single (sarpzf) or dual (darpzf) absorption")
    pgrp = chain.add_mutually_exclusive_group()
    pgrp.add_argument("--p", type=float, help="reversion probability in (0, 1)")
    pgrp.add_argument("--p-grid", help="inclusive grid start:stop:step of reversion probabilities")

    seed = argparse.ArgumentParser(add_help=False)
    seed.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed")

    start = argparse.ArgumentParser(add_help=False)
    start.add_argument("--start", default=None,
                       help="initial blue vertices, comma separated (default: vertex 0)")
    start.add_argument("--state", type=int, default=None,
                       help="state-space index to report instead of --start")
    start.add_argument("--mode", choices=("auto", "full", "collapsed"), default="auto",
                       help="state space: collapsed when the family allows it (auto), "
                            "all colorings (full), or force collapsed")

    parser = argparse.ArgumentParser(prog="rpzf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[graph, chain, start, out],
                       help="expected absorption times and absorption probabilities")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("critical-p", parents=[graph, start, out],
                       help="reversion probability giving equal die-out and fully-force odds")
    c.add_argument("--tol", type=float, default=1e-7, help="stop when |c_die - 1/2| <= tol")
    c.add_argument("--scan", action="store_true", help="warn if the curve crosses 1/2 twice")
    c.set_defaults(func=cmd_critical_p)

    s = sub.add_parser("simulate", parents=[graph, chain, seed, out],
                       help="seeded Monte Carlo estimates")
    s.add_argument("--start", default="0", help="initial blue vertices, comma separated")
    s.add_argument("--trials", type=int, default=10000, help="trials per grid point")
    s.add_argument("--max-rounds", type=int, default=10 ** 6, help="round cap before censoring")
    s.add_argument("--workers", type=int, default=1, help="worker processes")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("threshold", parents=[out], help="closed-form threshold sweeps")
    t.add_argument("--family", choices=("complete", "star", "bipartite"), required=True)
    t.add_argument("--metric", choices=(EXPECTATION_GAP, FORCE_PROB), default=EXPECTATION_GAP)
    t.add_argument("--n-grid", required=True, help="comma-separated increasing sizes, e.g. 100,1000")
    t.add_argument("--exponent", type=float, help="c in b_n = ceil(sqrt(n log n^c))")
    t.add_argument("--offset", type=int, help="star: b_n = n - 1 - offset")
    t.add_argument("--offset-exponent", type=float, help="star: b_n = n - 1 - ceil(n^a)")
    t.add_argument("--rule", choices=("balanced", "full"), default="balanced",
                   help="bipartite blue-count rule")
    t.add_argument("--p", type=float, default=0.5, help="reversion probability for gaps")
    t.set_defaults(func=cmd_threshold)

    m = sub.add_parser("meanfield", parents=[graph, out], help="mean-field density trajectories")
    m.add_argument("--model", choices=MODELS, required=True)
    m.add_argument("--beta", type=float, default=0.0, help="infection rate (unused by sarpzf)")
    m.add_argument("--p", type=float, required=True, help="recovery / reversion probability")
    m.add_argument("--horizon", type=int, default=50, help="number of steps")
    m.add_argument("--start", default="0", help="initially infected vertices")
    m.add_argument("--per-vertex", action="store_true", help="also write each vertex's probability")
    m.add_argument("--cap", type=int, default=SARPZF_CAP, help="largest n for the sarpzf model")
    m.set_defaults(func=cmd_meanfield)

    q = sub.add_parser("pmf", parents=[chain, out],
                       help="one-step blue-count distribution on K_n from b blue vertices")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--b", type=int, required=True)
    q.add_argument("--k", type=int, help="single outcome (default: all k = 0..n)")
    q.add_argument("--formula", type=int, choices=(1, 2), default=2,
                   help="1 = double-sum form, 2 = Poisson-binomial form")
    q.set_defaults(func=cmd_pmf)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except RPZFError as exc:
        print(f"rpzf: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
