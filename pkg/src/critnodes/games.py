"""Cooperative games over node sets: Shapley and Banzhaf allocations, ranking."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from critnodes.errors import ConfigError, GameSizeError

__all__ = [
    "MAX_EXACT_PLAYERS", "CoalitionGame", "Allocation", "Ranking", "shapley_exact", "shapley_mc",
    "banzhaf_mc", "banzhaf_exact", "permutation_marginals", "sample_permutation", "rank", "tie_keys",
    "read_allocation_csv", "write_allocation_csv",
]

MAX_EXACT_PLAYERS = 12


@dataclass
class CoalitionGame:
    """A game ``(ground, valuation)``.

    ``valuation`` receives a frozenset of players. If it also exposes
    ``prefix_values(base, order)`` (as ``ValuationOracle`` does), permutation
    sampling uses that batched path.
    """

    ground: list
    valuation: Callable[[frozenset], float]

    def __post_init__(self):
        self.ground = list(self.ground)
        if len(set(self.ground)) != len(self.ground):
            raise ValueError("ground set has duplicate players")

    @property
    def n(self) -> int:
        return len(self.ground)

    def value(self, coalition: Iterable[Hashable]) -> float:
        return float(self.valuation(frozenset(coalition)))

    def prefix_values(self, order: Sequence[Hashable]) -> np.ndarray:
        """``v(order[:j])`` for ``j = 0..len(order)``."""
        fast = getattr(self.valuation, "prefix_values", None)
        if fast is not None:
            return np.asarray(fast([], list(order)), dtype=np.float64)
        return np.array([self.value(order[:j]) for j in range(len(order) + 1)], dtype=np.float64)


@dataclass
class Allocation:
    values: dict
    stderr: dict | None = None
    num_permutations: int = 0

    @property
    def nodes(self) -> list:
        return list(self.values)

    def __getitem__(self, x) -> float:
        return self.values[x]

    def __len__(self) -> int:
        return len(self.values)

    def restrict(self, nodes: Iterable) -> "Allocation":
        keep = [x for x in nodes if x in self.values]
        se = None if self.stderr is None else {x: self.stderr[x] for x in keep}
        return Allocation({x: self.values[x] for x in keep}, se, self.num_permutations)


@dataclass
class Ranking:
    order: list
    tie_seed: int
    values: dict = field(default_factory=dict, repr=False)

    def __iter__(self):
        return iter(self.order)

    def __len__(self) -> int:
        return len(self.order)


def _coalition_weights(n: int) -> np.ndarray:
    # |S|! (n - |S| - 1)! / n! for |S| = 0..n-1
    return np.array([1.0 / (n * math.comb(n - 1, s)) for s in range(n)])


def shapley_exact(game: CoalitionGame, max_players: int = MAX_EXACT_PLAYERS) -> Allocation:
    """Exact Shapley values from one valuation per coalition (2^n calls)."""
    n = game.n
    if n > max_players:
        raise GameSizeError(f"exact Shapley limited to {max_players} players, got {n}; use shapley_mc")
    if n == 0:
        return Allocation({}, None, 0)
    ground = game.ground
    size = 1 << n
    v = np.empty(size, dtype=np.float64)
    for mask in range(size):
        v[mask] = game.value(ground[i] for i in range(n) if mask >> i & 1)
    masks = np.arange(size)
    pop = np.array([bin(m).count("1") for m in range(size)])
    w = _coalition_weights(n)
    values = {}
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        values[ground[i]] = float(np.sum(w[pop[without]] * (v[without | bit] - v[without])))
    return Allocation(values, None, 0)


def sample_permutation(n: int, seed: int, j: int) -> np.ndarray:
    """Permutation number ``j`` of a sampling run; a pure function of ``(seed, j)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(j)])).permutation(n)


def permutation_marginals(game: CoalitionGame, order: Sequence) -> dict:
    """Marginal contribution of every player in ``order`` to its predecessors."""
    vals = game.prefix_values(order)
    diffs = np.diff(vals)
    return {x: float(d) for x, d in zip(order, diffs)}


def shapley_mc(game: CoalitionGame, num_permutations: int, seed: int) -> Allocation:
    """Permutation-sampling Shapley estimate with per-player standard errors."""
    if num_permutations < 1:
        raise ConfigError("num_permutations must be >= 1")
    n = game.n
    ground = game.ground
    marg = np.empty((num_permutations, n), dtype=np.float64)
    for j in range(num_permutations):
        perm = sample_permutation(n, seed, j)
        vals = game.prefix_values([ground[i] for i in perm])
        marg[j, perm] = np.diff(vals)
    mean = marg.mean(axis=0)
    if num_permutations > 1:
        se = marg.std(axis=0, ddof=1) / math.sqrt(num_permutations)
    else:
        se = np.full(n, np.nan)
    return Allocation({x: float(mean[i]) for i, x in enumerate(ground)},
                      {x: float(se[i]) for i, x in enumerate(ground)}, num_permutations)


def banzhaf_mc(game: CoalitionGame, num_samples: int, seed: int) -> Allocation:
    """Banzhaf estimate: average of ``v(S + x) - v(S)`` over uniform random ``S`` of the others."""
    if num_samples < 1:
        raise ConfigError("num_samples must be >= 1")
    n = game.n
    ground = game.ground
    values, errs = {}, {}
    for i, x in enumerate(ground):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), i]))
        bits = rng.random((num_samples, n)) < 0.5
        bits[:, i] = False
        diffs = np.empty(num_samples)
        for s in range(num_samples):
            members = [ground[j] for j in np.flatnonzero(bits[s])]
            diffs[s] = game.value(members + [x]) - game.value(members)
        values[x] = float(diffs.mean())
        errs[x] = float(diffs.std(ddof=1) / math.sqrt(num_samples)) if num_samples > 1 else float("nan")
    return Allocation(values, errs, num_samples)


def banzhaf_exact(game: CoalitionGame, max_players: int = MAX_EXACT_PLAYERS) -> Allocation:
    """Brute-force Banzhaf values; small games only."""
    n = game.n
    if n > max_players:
        raise GameSizeError(f"exact Banzhaf limited to {max_players} players, got {n}")
    ground = game.ground
    v = {mask: game.value(ground[i] for i in range(n) if mask >> i & 1) for mask in range(1 << n)}
    values = {}
    for i, x in enumerate(ground):
        bit = 1 << i
        diffs = [v[m | bit] - v[m] for m in range(1 << n) if not m & bit]
        values[x] = math.fsum(diffs) / len(diffs)
    return Allocation(values, None, 0)


def tie_keys(n: int, tie_seed: int) -> np.ndarray:
    """Random tie-break priority per position; lower key wins a tie."""
    return np.random.default_rng(np.random.SeedSequence([int(tie_seed), 0x7469])).permutation(n)


def rank(alloc: Allocation, tie_seed: int) -> Ranking:
    """Descending order of values; runs of equal values are shuffled with ``tie_seed``."""
    nodes = alloc.nodes
    if not nodes:
        return Ranking([], tie_seed, {})
    vals = np.array([alloc.values[x] for x in nodes], dtype=np.float64)
    order = np.lexsort((tie_keys(len(nodes), tie_seed), -vals))
    return Ranking([nodes[i] for i in order], tie_seed, dict(alloc.values))


def write_allocation_csv(alloc: Allocation, fh=None) -> str:
    """``node,value[,stderr]`` CSV; floats use shortest round-trip repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    has_se = alloc.stderr is not None
    w.writerow(["node", "value", "stderr"] if has_se else ["node", "value"])
    for x, v in alloc.values.items():
        row = [x, repr(float(v))]
        if has_se:
            row.append(repr(float(alloc.stderr[x])))
        w.writerow(row)
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_allocation_csv(fh) -> Allocation:
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or not {"node", "value"} <= set(reader.fieldnames):
        raise ConfigError("allocation CSV needs a 'node,value' header")
    has_se = "stderr" in reader.fieldnames
    values, errs = {}, {}
    for row in reader:
        x = row["node"]
        if x in values:
            raise ConfigError(f"duplicate node {x!r} in allocation CSV")
        values[x] = float(row["value"])
        if has_se:
            errs[x] = float(row["stderr"])
    return Allocation(values, errs if has_se else None, 0)
