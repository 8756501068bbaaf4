"""Greedy hill-climbing, the marginal (reduced) game and Shapley-greedy selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from critnodes.errors import ConfigError, DomainError
from critnodes.games import (MAX_EXACT_PLAYERS, Allocation, CoalitionGame, banzhaf_mc, shapley_exact,
                             shapley_mc, tie_keys)
from critnodes.graph import Graph
from critnodes.select import PRIMARY, DiscountMethod, Selection, StepRecord, select_discount

__all__ = [
    "PermutationSchedule", "HybridConfig", "MarginalValuation", "greedy_hill_climb", "marginal_game",
    "shapley_greedy", "hybrid_select", "step_seed",
]


@dataclass(frozen=True)
class PermutationSchedule:
    """Permutation budget per Shapley-greedy step."""

    budgets: tuple[int, ...]

    def __post_init__(self):
        if not self.budgets:
            raise ConfigError("permutation schedule is empty")
        if any(int(m) != m or m < 1 for m in self.budgets):
            raise ConfigError(f"permutation budgets must be integers >= 1, got {self.budgets}")

    @classmethod
    def parse(cls, text, k: int) -> "PermutationSchedule":
        """A single integer means a constant schedule of length ``k``; a comma list is taken as is."""
        if isinstance(text, int):
            return cls((text,) * k)
        parts = [p for p in str(text).split(",") if p.strip()]
        try:
            budgets = tuple(int(p) for p in parts)
        except ValueError:
            raise ConfigError(f"bad permutation budgets {text!r}") from None
        if len(budgets) == 1:
            budgets = budgets * k
        return cls(budgets)

    def __len__(self) -> int:
        return len(self.budgets)

    def __getitem__(self, t: int) -> int:
        return self.budgets[t]


@dataclass(frozen=True)
class HybridConfig:
    k_tilde: int
    tail_method: DiscountMethod


def step_seed(seed: int, t: int) -> int:
    """Permutation seed for Shapley-greedy step ``t``."""
    return int(np.random.SeedSequence([int(seed), int(t)]).generate_state(1)[0])


def _ground_of(valuation, ground) -> list:
    if ground is None:
        ground = getattr(valuation, "ground", None)
        if ground is None:
            raise ConfigError("ground set required for plain valuation functions")
    return list(ground)


def greedy_hill_climb(valuation: Callable, ground: Sequence | None, k: int, tie_seed: int) -> Selection:
    """Add, k times, the node with the largest marginal gain; ties broken by ``tie_seed``."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    ground = _ground_of(valuation, ground)
    keys = tie_keys(len(ground), tie_seed)
    chosen: list = []
    audit: list[StepRecord] = []
    current = float(valuation(frozenset()))
    remaining = list(range(len(ground)))
    for t in range(min(k, len(ground))):
        base = frozenset(chosen)
        gains = np.array([float(valuation(base | {ground[i]})) - current for i in remaining])
        best = gains.max()
        tied = [i for i, gain in zip(remaining, gains) if gain == best]
        pick = min(tied, key=lambda i: keys[i])
        chosen.append(ground[pick])
        remaining.remove(pick)
        current = float(valuation(frozenset(chosen)))
        audit.append(StepRecord(t + 1, ground[pick], PRIMARY, gain=float(best)))
    return Selection(chosen, audit, "greedy")


class MarginalValuation:
    """``omega(S) = nu(chosen + S) - nu(chosen)`` over the unchosen nodes."""

    def __init__(self, valuation: Callable, chosen: Iterable, ground: Iterable):
        self.valuation = valuation
        self.base = frozenset(chosen)
        ground = list(ground)
        if not self.base <= set(ground):
            raise DomainError("chosen set is not a subset of the ground set")
        self.ground = [x for x in ground if x not in self.base]
        self.domain = frozenset(self.ground)
        self.base_value = float(valuation(self.base))

    def _check(self, nodes) -> None:
        extra = set(nodes) - self.domain
        if extra:
            raise DomainError(f"nodes {sorted(map(str, extra))} are outside the reduced game's ground set")

    def __call__(self, coalition: Iterable) -> float:
        s = frozenset(coalition)
        self._check(s)
        return float(self.valuation(self.base | s)) - self.base_value

    def prefix_values(self, base: Sequence, order: Sequence) -> np.ndarray:
        self._check(list(base) + list(order))
        fast = getattr(self.valuation, "prefix_values", None)
        if fast is not None:
            vals = np.asarray(fast(sorted(self.base, key=str) + list(base), list(order)), dtype=np.float64)
        else:
            head = self.base | frozenset(base)
            vals = np.array([float(self.valuation(head | frozenset(order[:j]))) for j in range(len(order) + 1)])
        return vals - self.base_value


def marginal_game(valuation: Callable, chosen: Iterable, ground: Sequence | None = None) -> CoalitionGame:
    """The reduced game on ``ground - chosen`` valued by the gain over ``chosen``."""
    mv = MarginalValuation(valuation, chosen, _ground_of(valuation, ground))
    return CoalitionGame(mv.ground, mv)


def _step_allocation(game: CoalitionGame, budget: int, seed: int, t: int,
                     max_exact: int = MAX_EXACT_PLAYERS) -> Allocation:
    n = game.n
    if n <= max_exact and budget >= math.factorial(n):
        return shapley_exact(game, max_exact)
    return shapley_mc(game, budget, step_seed(seed, t))


def _shapley_greedy(valuation, ground, k, schedule, seed, tie_seed, steps):
    ground = _ground_of(valuation, ground)
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if len(schedule) < steps:
        raise ConfigError(f"permutation schedule has {len(schedule)} entries, need {steps}")
    keys = tie_keys(len(ground), tie_seed)
    pos = {x: i for i, x in enumerate(ground)}
    chosen: list = []
    audit: list[StepRecord] = []
    alloc = None
    for t in range(1, min(steps, len(ground)) + 1):
        game = marginal_game(valuation, chosen, ground)
        alloc = _step_allocation(game, schedule[t - 1], seed, t)
        best = max(alloc.values.values())
        tied = [x for x in game.ground if alloc.values[x] == best]
        pick = min(tied, key=lambda x: keys[pos[x]])
        chosen.append(pick)
        audit.append(StepRecord(t, pick, PRIMARY, gain=float(best)))
    return Selection(chosen, audit, "shapley-greedy"), alloc


def shapley_greedy(valuation: Callable, ground: Sequence | None, k: int, schedule: PermutationSchedule,
                   seed: int, tie_seed: int) -> Selection:
    """At step t pick the top Shapley node of the game reduced by the first t-1 picks.

    Sampling the reduced game is the same as sampling full permutations with
    the picks fixed in front: their terms cancel in every marginal. When the
    step budget covers all permutations of a small reduced game the exact
    values are used instead.
    """
    sel, _ = _shapley_greedy(valuation, ground, k, schedule, seed, tie_seed, k)
    return sel


def hybrid_select(valuation: Callable, g: Graph, k: int, cfg: HybridConfig, schedule: PermutationSchedule,
                  seed: int, tie_seed: int, alloc_method: str = "shapley", clamp: bool = False,
                  ground: Sequence | None = None) -> Selection:
    """Shapley-greedy for the first ``k_tilde`` picks, discounting for the rest.

    The tail works on the last reduced-game allocation (restricted to unchosen
    nodes), with the greedy picks treated as already chosen so their neighbor
    discounts apply. With ``k_tilde == 0`` the tail starts from a full-game
    allocation computed by ``alloc_method`` ('shapley' or 'banzhaf') with
    budget ``schedule[0]``.
    """
    kt = cfg.k_tilde
    if not 0 <= kt <= k:
        raise ConfigError(f"k_tilde must lie in [0, k], got {kt}")
    ground = _ground_of(valuation, ground)
    if kt == k:
        sel, _ = _shapley_greedy(valuation, ground, k, schedule, seed, tie_seed, k)
        sel.method = "hybrid"
        return sel
    if kt == 0:
        game = CoalitionGame(ground, valuation)
        if alloc_method == "shapley":
            alloc = _step_allocation(game, schedule[0], seed, 1)
        elif alloc_method == "banzhaf":
            alloc = banzhaf_mc(game, schedule[0], step_seed(seed, 1))
        else:
            raise ConfigError(f"unknown allocation method {alloc_method!r}")
        sel = select_discount(g, alloc, k, cfg.tail_method, tie_seed, clamp=clamp)
        sel.method = "hybrid"
        return sel
    head, alloc = _shapley_greedy(valuation, ground, k, schedule, seed, tie_seed, kt)
    rest = alloc.restrict(x for x in alloc.nodes if x not in set(head.chosen))
    prechosen = [(r.node, r.gain) for r in head.audit]
    tail = select_discount(g, rest, k, cfg.tail_method, tie_seed, clamp=clamp, prechosen=prechosen)
    audit = []
    for rec, replay in zip(head.audit, tail.audit):
        rec.discounts = replay.discounts
        audit.append(rec)
    audit.extend(tail.audit[len(head.audit):])
    return Selection(tail.chosen, audit, "hybrid", tail.final_values)
