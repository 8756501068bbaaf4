"""Experiment driver: one config in, one result row (and optional artifacts) out."""

from __future__ import annotations

import csv
import io
import itertools
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from critnodes.diffusion import DiffusionModel, ValuationOracle, estimate_spread
from critnodes.errors import ConfigError, GameSizeError
from critnodes.games import (Allocation, CoalitionGame, banzhaf_mc, rank, read_allocation_csv, shapley_exact,
                             shapley_mc)
from critnodes.graph import Graph, load_edge_list
from critnodes.greedy import (HybridConfig, PermutationSchedule, greedy_hill_climb, hybrid_select,
                              shapley_greedy)
from critnodes.select import (DiscountMethod, Selection, ThresholdSpec, select_discount, select_eliminate_always,
                              select_eliminate_local, select_eliminate_threshold, select_naive)

__all__ = [
    "METHODS", "RESULT_HEADER", "ExperimentConfig", "ResultRow", "brute_force_topk", "run_experiment",
    "RunOutput", "eval_seed_for", "write_results_csv", "read_results_csv", "compute_allocation",
]

BRUTE_FORCE_LIMIT = 200_000

POST_PROCESSING = ("naive", "eliminate-always", "eliminate-threshold", "eliminate-local",
                   "discount-d1", "discount-d2", "discount-d3", "discount-combo")
METHODS = POST_PROCESSING + ("greedy", "shapley-greedy", "hybrid", "oracle")

RESULT_HEADER = ["method", "k", "chosen", "spread_mean", "spread_stderr", "nu_calls", "ms",
                 "sim_seed", "perm_seed", "tie_seed"]


@dataclass
class ExperimentConfig:
    graph_path: str
    model: str = "ic"
    num_sims: int = 1000
    k: int = 1
    method: str = "naive"
    sim_seed: int = 0
    perm_seed: int = 1
    tie_seed: int = 2
    budgets: str = "100"
    out: str | None = None
    undirected: bool = False
    memoize: bool = False
    workers: int = 1
    # allocation source for post-processing: shapley | shapley-exact | banzhaf | path to CSV
    alloc: str = "shapley"
    threshold_kind: str = "fixed"
    tau: float = 0.5
    lam: float = 1.0
    fraction: float = 0.5
    combo_weights: str | None = None
    tail: str = "d1"
    k_tilde: int = 1
    clamp: bool = False
    eval_seed: int | None = None
    eval_sims: int | None = None
    timing: bool = False

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.num_sims < 1:
            raise ConfigError("num_sims must be >= 1")
        if str(self.model).lower() not in ("ic", "lt"):
            raise ConfigError(f"unknown diffusion model {self.model!r}; use 'ic' or 'lt'")


@dataclass
class ResultRow:
    method: str
    k: int
    chosen: list = field(default_factory=list)
    spread_mean: float = 0.0
    spread_stderr: float = 0.0
    nu_calls: int = 0
    ms: int = 0
    sim_seed: int = 0
    perm_seed: int = 0
    tie_seed: int = 0

    def as_row(self) -> list[str]:
        for x in self.chosen:
            if ";" in x:
                raise ConfigError(f"node label {x!r} contains ';' and cannot be written to the results CSV")
        return [self.method, str(self.k), ";".join(self.chosen), repr(float(self.spread_mean)),
                repr(float(self.spread_stderr)), str(self.nu_calls), str(self.ms),
                str(self.sim_seed), str(self.perm_seed), str(self.tie_seed)]

    @classmethod
    def from_row(cls, row: dict) -> "ResultRow":
        return cls(row["method"], int(row["k"]), row["chosen"].split(";") if row["chosen"] else [],
                   float(row["spread_mean"]), float(row["spread_stderr"]), int(row["nu_calls"]),
                   int(row["ms"]), int(row["sim_seed"]), int(row["perm_seed"]), int(row["tie_seed"]))


def write_results_csv(rows: Sequence[ResultRow], fh=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    for r in rows:
        w.writerow(r.as_row())
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_results_csv(fh) -> list[ResultRow]:
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    reader = csv.DictReader(fh)
    if reader.fieldnames != RESULT_HEADER:
        raise ConfigError(f"unexpected results header {reader.fieldnames}")
    return [ResultRow.from_row(r) for r in reader]


def eval_seed_for(sim_seed: int) -> int:
    """Held-out seed for reporting a final set's spread, distinct from the selection seed."""
    seed = int(np.random.SeedSequence([int(sim_seed), 0x6576616C]).generate_state(1)[0])
    return seed if seed != sim_seed else seed + 1


def brute_force_topk(valuation: Callable, ground: Sequence, k: int,
                     limit: int = BRUTE_FORCE_LIMIT) -> tuple[list, float]:
    """Best k-subset by exhaustive search; ties go to the lexicographically smallest index set."""
    ground = list(ground)
    k = min(k, len(ground))
    total = math.comb(len(ground), k)
    if total > limit:
        raise GameSizeError(f"C({len(ground)}, {k}) = {total} subsets exceeds the brute-force limit {limit}")
    best, best_val = None, -math.inf
    for combo in itertools.combinations(range(len(ground)), k):
        val = float(valuation(frozenset(ground[i] for i in combo)))
        if val > best_val:
            best, best_val = combo, val
    return [ground[i] for i in best], best_val


def compute_allocation(cfg: ExperimentConfig, valuation: ValuationOracle, budget: int) -> Allocation:
    game = CoalitionGame(valuation.ground, valuation)
    if cfg.alloc == "shapley":
        return shapley_mc(game, budget, cfg.perm_seed)
    if cfg.alloc == "shapley-exact":
        return shapley_exact(game)
    if cfg.alloc == "banzhaf":
        return banzhaf_mc(game, budget, cfg.perm_seed)
    path = Path(cfg.alloc)
    if not path.exists():
        raise ConfigError(f"allocation source {cfg.alloc!r} is neither a known method nor a file")
    with open(path, encoding="utf-8") as fh:
        alloc = read_allocation_csv(fh)
    missing = [x for x in alloc.nodes if x not in valuation.graph]
    if missing:
        raise ConfigError(f"allocation names nodes missing from the graph: {missing[:5]}")
    return alloc


def _select(cfg: ExperimentConfig, g: Graph, valuation: ValuationOracle) -> Selection:
    method, k = cfg.method, cfg.k
    schedule = PermutationSchedule.parse(cfg.budgets, k)
    if method in POST_PROCESSING:
        alloc = compute_allocation(cfg, valuation, schedule[0])
        ranking = rank(alloc, cfg.tie_seed)
        if method == "naive":
            return select_naive(ranking, k)
        if method == "eliminate-always":
            return select_eliminate_always(g, ranking, k)
        if method == "eliminate-threshold":
            spec = ThresholdSpec(cfg.threshold_kind, cfg.tau, cfg.lam)
            return select_eliminate_threshold(g, ranking, k, spec, alloc)
        if method == "eliminate-local":
            return select_eliminate_local(g, ranking, k, cfg.fraction)
        text = method if method != "discount-combo" else f"combo:{cfg.combo_weights or ''}"
        return select_discount(g, alloc, k, DiscountMethod.parse(text), cfg.tie_seed, clamp=cfg.clamp)
    if method == "greedy":
        return greedy_hill_climb(valuation, None, k, cfg.tie_seed)
    if method == "shapley-greedy":
        return shapley_greedy(valuation, None, k, schedule, cfg.perm_seed, cfg.tie_seed)
    if method == "hybrid":
        hc = HybridConfig(cfg.k_tilde, DiscountMethod.parse(cfg.tail))
        return hybrid_select(valuation, g, k, hc, schedule, cfg.perm_seed, cfg.tie_seed, clamp=cfg.clamp)
    if method == "oracle":
        chosen, _ = brute_force_topk(valuation, valuation.ground, k)
        return Selection(chosen, [], "oracle")
    raise ConfigError(f"unknown method {method!r}")


def load_graph(cfg: ExperimentConfig) -> Graph:
    model = DiffusionModel.parse(cfg.model)
    return load_edge_list(cfg.graph_path, expect_lt_valid=model is DiffusionModel.LT, undirected=cfg.undirected)


def make_oracle(cfg: ExperimentConfig, g: Graph) -> ValuationOracle:
    return ValuationOracle(g, cfg.model, cfg.num_sims, cfg.sim_seed, memoize=cfg.memoize, workers=cfg.workers)


@dataclass
class RunOutput:
    rows: list[ResultRow]
    selection: Selection
    elapsed_ms: int
    valuation: ValuationOracle


def run_experiment(cfg: ExperimentConfig, graph: Graph | None = None) -> RunOutput:
    """Load, select, re-evaluate the chosen set on a held-out seed, and write the results CSV.

    The CSV ``ms`` column is only filled in when ``cfg.timing`` is set, so that
    output files are byte-reproducible by default; ``RunOutput.elapsed_ms``
    always carries the measurement.
    """
    cfg.validate()
    g = graph if graph is not None else load_graph(cfg)
    valuation = make_oracle(cfg, g)
    t0 = time.perf_counter()
    sel = _select(cfg, g, valuation)
    elapsed = int(round((time.perf_counter() - t0) * 1000))
    est = estimate_spread(g, cfg.model, sel.chosen, cfg.eval_sims or cfg.num_sims,
                          cfg.eval_seed if cfg.eval_seed is not None else eval_seed_for(cfg.sim_seed),
                          workers=cfg.workers)
    row = ResultRow(sel.method, cfg.k, list(sel.chosen), est.mean, est.stderr, valuation.calls,
                    elapsed if cfg.timing else 0, cfg.sim_seed, cfg.perm_seed, cfg.tie_seed)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            write_results_csv([row], fh)
    return RunOutput([row], sel, elapsed, valuation)
