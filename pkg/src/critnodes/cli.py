"""Command-line entry point: ``critnodes <subcommand> --graph edges.tsv ...``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from critnodes.diffusion import ValuationOracle
from critnodes.errors import CritNodesError
from critnodes.games import CoalitionGame, banzhaf_mc, shapley_exact, shapley_mc, write_allocation_csv
from critnodes.harness import (POST_PROCESSING, ExperimentConfig, ResultRow, load_graph, run_experiment,
                               write_results_csv)

# CLI flag -> ExperimentConfig field, for flags whose names differ.
_FLAG_FIELDS = {"graph": "graph_path", "sims": "num_sims", "seed": "sim_seed"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of option defaults; command-line flags take precedence")
    p.add_argument("--graph", help="edge list: src<TAB>dst<TAB>weight per line")
    p.add_argument("--model", choices=["ic", "lt"], default="ic")
    p.add_argument("--sims", type=int, default=1000, help="Monte-Carlo simulations per valuation")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="simulation seed")
    p.add_argument("--tie-seed", type=int, default=2)
    p.add_argument("--perm-seed", type=int, default=1)
    p.add_argument("--budgets", default="100",
                   help="permutation/sample budget: one integer or a comma list m1,m2,... (one per step)")
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.add_argument("--audit", nargs="?", const="", default=None, metavar="PATH",
                   help="write the per-step audit log as JSON lines (default PATH: <out>.audit.jsonl)")
    p.add_argument("--selection-out", help="also write the selection as rank,node,phase CSV")
    p.add_argument("--undirected", action="store_true", help="read each edge in both directions")
    p.add_argument("--memoize", action="store_true", help="cache coalition valuations")
    p.add_argument("--workers", type=int, default=1, help="threads for simulation fan-out")
    p.add_argument("--eval-seed", type=int, default=None, help="held-out seed for reporting spread")
    p.add_argument("--eval-sims", type=int, default=None)
    p.add_argument("--timing", action="store_true", help="record wall-clock ms in the results CSV")
    p.add_argument("--clamp", action="store_true", help="floor the D2 discount factor at 0 on non-LT graphs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="critnodes", description="Top-k critical nodes via cooperative games.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spread", help="estimate the spread of a given node set")
    _common(p)
    p.add_argument("--nodes", required=True, help="comma-separated node ids")

    p = sub.add_parser("shapley", help="write a Shapley allocation CSV")
    _common(p)
    p.add_argument("--exact", action="store_true", help="exact Shapley (small graphs only)")

    p = sub.add_parser("banzhaf", help="write a Banzhaf allocation CSV")
    _common(p)

    p = sub.add_parser("select", help="post-process an allocation into a top-k set")
    _common(p)
    p.add_argument("--method", required=True, choices=POST_PROCESSING)
    p.add_argument("--alloc", default="shapley",
                   help="allocation CSV path, or one of shapley | shapley-exact | banzhaf to compute inline")
    p.add_argument("--threshold-kind", choices=["fixed", "value_scaled"], default="fixed")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--combo-weights", help="l1,l2,l3 for discount-combo")

    for name, text in (("greedy", "greedy hill-climbing"), ("shapley-greedy", "Shapley-greedy selection")):
        p = sub.add_parser(name, help=text)
        _common(p)

    p = sub.add_parser("hybrid", help="Shapley-greedy for k-tilde picks, then discounting")
    _common(p)
    p.add_argument("--k-tilde", type=int, default=1)
    p.add_argument("--tail", default="d1", help="d1 | d2 | d3 | combo:l1,l2,l3")

    p = sub.add_parser("oracle", help="brute-force best k-set")
    _common(p)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CritNodesError(f"cannot read config file {args.config}: {exc}") from None
    if not isinstance(data, dict):
        raise CritNodesError("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise CritNodesError(f"unknown config key {key!r}")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _to_config(args: argparse.Namespace, method: str) -> ExperimentConfig:
    data = {}
    for key in ("graph", "model", "sims", "k", "seed", "tie_seed", "perm_seed", "budgets", "out", "undirected",
                "memoize", "workers", "alloc", "threshold_kind", "tau", "lam", "fraction", "combo_weights",
                "tail", "k_tilde", "clamp", "eval_seed", "eval_sims", "timing"):
        if hasattr(args, key):
            data[_FLAG_FIELDS.get(key, key)] = getattr(args, key)
    data["budgets"] = str(data["budgets"])
    data["method"] = method
    return ExperimentConfig.from_mapping(data)


@contextmanager
def _output(path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _report(method: str, calls: int, ms: int) -> None:
    print(f"[critnodes] method={method} nu_calls={calls} ms={ms}", file=sys.stderr)


def _run_allocation(args) -> int:
    cfg = _to_config(args, "naive")
    g = load_graph(cfg)
    oracle = ValuationOracle(g, cfg.model, cfg.num_sims, cfg.sim_seed, memoize=cfg.memoize, workers=cfg.workers)
    game = CoalitionGame(oracle.ground, oracle)
    budget = int(str(cfg.budgets).split(",")[0])
    t0 = time.perf_counter()
    if args.command == "banzhaf":
        alloc = banzhaf_mc(game, budget, cfg.perm_seed)
    elif args.exact:
        alloc = shapley_exact(game)
    else:
        alloc = shapley_mc(game, budget, cfg.perm_seed)
    _report(args.command, oracle.calls, int(round((time.perf_counter() - t0) * 1000)))
    with _output(cfg.out) as fh:
        write_allocation_csv(alloc, fh)
    return 0


def _run_spread(args) -> int:
    cfg = _to_config(args, "naive")
    g = load_graph(cfg)
    nodes = [x.strip() for x in args.nodes.split(",") if x.strip()]
    oracle = ValuationOracle(g, cfg.model, cfg.num_sims, cfg.sim_seed, workers=cfg.workers)
    est = oracle.estimate(nodes)
    row = ResultRow("spread", len(nodes), nodes, est.mean, est.stderr, oracle.calls, 0,
                    cfg.sim_seed, cfg.perm_seed, cfg.tie_seed)
    _report("spread", oracle.calls, 0)
    with _output(cfg.out) as fh:
        write_results_csv([row], fh)
    return 0


def _run_selection(args) -> int:
    method = args.method if args.command == "select" else args.command
    cfg = _to_config(args, method)
    out_path, cfg.out = cfg.out, None
    result = run_experiment(cfg)
    _report(result.selection.method, result.valuation.calls, result.elapsed_ms)
    with _output(out_path) as fh:
        write_results_csv(result.rows, fh)
    if args.selection_out:
        with open(args.selection_out, "w", encoding="utf-8", newline="") as fh:
            result.selection.to_csv(fh)
    if args.audit is not None:
        path = args.audit or (f"{out_path}.audit.jsonl" if out_path else None)
        if path:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(result.selection.audit_lines())
        else:
            sys.stderr.write(result.selection.audit_lines())
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config_file(parser, argv)
        if not args.graph:
            parser.error("--graph is required (flag or config file)")
        if args.command in ("shapley", "banzhaf"):
            return _run_allocation(args)
        if args.command == "spread":
            return _run_spread(args)
        return _run_selection(args)
    except CritNodesError as exc:
        print(f"critnodes: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"critnodes: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
