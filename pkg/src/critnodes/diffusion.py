"""Independent cascade and linear threshold simulation, Monte-Carlo spread.

Randomness contract: simulation ``i`` under base seed ``s`` draws from
``PCG64(SeedSequence([s, i]))``. For IC that stream yields one uniform coin in
[0, 1) per edge (edge-id order); an edge is live when ``coin < weight``. For LT
it yields one threshold per node (node-index order), drawn on (0, 1); a node
activates once the summed weight of its active in-neighbors is ``>= theta``.
Because a stream depends only on ``(s, i)``, results do not depend on
evaluation order or on how simulations are split across workers.
"""

from __future__ import annotations

import enum
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from critnodes import kernels
from critnodes.errors import GraphModelError
from critnodes.graph import Graph

__all__ = [
    "DiffusionModel", "SpreadEstimate", "ValuationOracle", "sim_rng", "draw_randomness",
    "simulate_ic", "simulate_lt", "estimate_spread", "make_valuation",
]

_TINY = np.nextafter(0.0, 1.0)


class DiffusionModel(str, enum.Enum):
    IC = "ic"
    LT = "lt"

    @classmethod
    def parse(cls, value) -> "DiffusionModel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise GraphModelError(f"unknown diffusion model {value!r}; use 'ic' or 'lt'") from None


@dataclass(frozen=True)
class SpreadEstimate:
    mean: float
    stderr: float
    num_sims: int


def sim_rng(base_seed: int, i: int, *extra: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(base_seed), int(i), *extra])))


def draw_randomness(g: Graph, model: DiffusionModel, num_sims: int, base_seed: int,
                    extra: tuple[int, ...] = ()) -> np.ndarray:
    """Per-simulation randomness: ``(num_sims, m)`` coins for IC, ``(num_sims, n)`` thresholds for LT."""
    model = DiffusionModel.parse(model)
    width = g.m if model is DiffusionModel.IC else g.n
    out = np.empty((num_sims, width), dtype=np.float64)
    for i in range(num_sims):
        out[i] = sim_rng(base_seed, i, *extra).random(width)
    if model is DiffusionModel.LT:
        # Generator.random is on [0, 1); lift the measure-zero 0.0 into the open interval.
        np.maximum(out, _TINY, out=out)
    return out


def _check_len(arr: np.ndarray, expected: int, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.shape != (expected,):
        raise ValueError(f"expected {expected} {what}, got shape {arr.shape}")
    return arr


def simulate_ic(g: Graph, seeds: Iterable[str], coins) -> set[str]:
    """Activated set of one IC run given one coin per edge (edge-id order)."""
    idx = g.indices(seeds)
    coins = _check_len(coins, g.m, "edge coins")
    mask = kernels.ic_active(g.out_ptr, g.out_idx, g.out_w, coins, idx)
    return {g.label(i) for i in np.flatnonzero(mask)}


def simulate_lt(g: Graph, seeds: Iterable[str], thresholds) -> set[str]:
    """Activated set of one LT run given one threshold per node (node-index order)."""
    g.require_lt_valid()
    idx = g.indices(seeds)
    theta = _check_len(thresholds, g.n, "node thresholds")
    mask = kernels.lt_active(g.out_ptr, g.out_idx, g.in_ptr, g.in_idx, g.in_w, theta, idx)
    return {g.label(i) for i in np.flatnonzero(mask)}


def _summarize(counts: np.ndarray) -> SpreadEstimate:
    sims = len(counts)
    mean = int(counts.sum()) / sims
    stderr = float(np.std(counts, ddof=1) / np.sqrt(sims)) if sims > 1 else 0.0
    return SpreadEstimate(mean, stderr, sims)


class _Runner:
    """Dispatches a kernel over blocks of simulations, optionally on a thread pool."""

    def __init__(self, g: Graph, model: DiffusionModel, workers: int = 1, backend: str | None = None):
        self.g = g
        self.model = model
        self.workers = max(1, int(workers))
        self.impl = kernels.get_backend(backend) if backend else kernels

    def _blocks(self, sims: int):
        k = min(self.workers, sims) or 1
        edges = np.linspace(0, sims, k + 1).astype(int)
        return [(edges[j], edges[j + 1]) for j in range(k) if edges[j + 1] > edges[j]]

    def _map(self, fn, rand: np.ndarray):
        blocks = self._blocks(rand.shape[0])
        if len(blocks) == 1:
            return [fn(rand)]
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            return list(pool.map(lambda b: fn(rand[b[0]:b[1]]), blocks))

    def counts(self, rand: np.ndarray, seeds: np.ndarray) -> np.ndarray:
        g, impl = self.g, self.impl
        if self.model is DiffusionModel.IC:
            def fn(r):
                return impl.ic_counts(g.out_ptr, g.out_idx, g.out_w, r, seeds)
        else:
            def fn(r):
                return impl.lt_counts(g.out_ptr, g.out_idx, g.in_ptr, g.in_idx, g.in_w, r, seeds)
        return np.concatenate(self._map(fn, rand))

    def prefix_totals(self, rand: np.ndarray, base: np.ndarray, order: np.ndarray) -> np.ndarray:
        g, impl = self.g, self.impl
        if self.model is DiffusionModel.IC:
            def fn(r):
                return impl.ic_prefix_totals(g.out_ptr, g.out_idx, g.out_w, r, base, order)
        else:
            def fn(r):
                return impl.lt_prefix_totals(g.out_ptr, g.out_idx, g.in_ptr, g.in_idx, g.in_w, r, base, order)
        parts = self._map(fn, rand)
        return np.sum(parts, axis=0, dtype=np.int64)


def estimate_spread(g: Graph, model, seeds: Iterable[str], num_sims: int, base_seed: int,
                    workers: int = 1) -> SpreadEstimate:
    """Monte-Carlo expected number of activated nodes for ``seeds``."""
    if num_sims < 1:
        raise ValueError("num_sims must be >= 1")
    model = DiffusionModel.parse(model)
    if model is DiffusionModel.LT:
        g.require_lt_valid()
    idx = np.unique(g.indices(seeds))
    if len(idx) == 0:
        return SpreadEstimate(0.0, 0.0, num_sims)
    rand = draw_randomness(g, model, num_sims, base_seed)
    return _summarize(_Runner(g, model, workers).counts(rand, idx))


class ValuationOracle:
    """The game's valuation: coalition of node labels -> estimated spread.

    With common random numbers (default) every coalition is simulated against
    the same pre-drawn randomness, so ``nu`` is monotone and reproducible.
    ``calls`` counts coalition valuations actually computed; cache hits are
    counted separately in ``cache_hits``.
    """

    def __init__(self, g: Graph, model, num_sims: int, base_seed: int, memoize: bool = False,
                 common_random_numbers: bool = True, workers: int = 1, backend: str | None = None):
        if num_sims < 1:
            raise ValueError("num_sims must be >= 1")
        self.graph = g
        self.model = DiffusionModel.parse(model)
        if self.model is DiffusionModel.LT:
            g.require_lt_valid()
        self.num_sims = int(num_sims)
        self.base_seed = int(base_seed)
        self.memoize = memoize
        self.common_random_numbers = common_random_numbers
        self.calls = 0
        self.cache_hits = 0
        self.sims_run = 0
        self._runner = _Runner(g, self.model, workers, backend)
        self._rand: np.ndarray | None = None
        self._cache: dict[tuple[int, ...], SpreadEstimate] = {}
        self._lock = threading.Lock()

    @property
    def ground(self) -> list[str]:
        return list(self.graph.labels)

    def _randomness(self, key: tuple[int, ...]) -> np.ndarray:
        if self.common_random_numbers:
            if self._rand is None:
                self._rand = draw_randomness(self.graph, self.model, self.num_sims, self.base_seed)
            return self._rand
        # Independent streams: mix a stable digest of the coalition into the seed.
        digest = np.random.SeedSequence(list(key) or [0]).generate_state(2)
        return draw_randomness(self.graph, self.model, self.num_sims, self.base_seed,
                               extra=(len(key), *map(int, digest)))

    def key(self, coalition: Iterable[str]) -> tuple[int, ...]:
        return tuple(sorted(set(int(i) for i in self.graph.indices(coalition))))

    def estimate(self, coalition: Iterable[str]) -> SpreadEstimate:
        return self._estimate_key(self.key(coalition))

    def _estimate_key(self, key: tuple[int, ...]) -> SpreadEstimate:
        if self.memoize:
            with self._lock:
                hit = self._cache.get(key)
                if hit is not None:
                    self.cache_hits += 1
                    return hit
        if not key:
            est = SpreadEstimate(0.0, 0.0, self.num_sims)
        else:
            counts = self._runner.counts(self._randomness(key), np.asarray(key, dtype=np.int64))
            est = _summarize(counts)
        with self._lock:
            self.calls += 1
            self.sims_run += self.num_sims if key else 0
            if self.memoize:
                self._cache.setdefault(key, est)
        return est

    def __call__(self, coalition: Iterable[str]) -> float:
        return self.estimate(coalition).mean

    def prefix_values(self, base: Iterable[str], order: Iterable[str]) -> np.ndarray:
        """``nu(base + order[:j])`` for ``j = 0..len(order)``.

        Under common random numbers this runs one incremental pass per
        simulation; values are bit-identical to evaluating each prefix alone.
        Each prefix counts as one valuation call. With memoization, ``nu(base)``
        is served from (and stored in) the cache; longer prefixes are not cached.
        """
        base_idx = self.graph.indices(base)
        order_idx = self.graph.indices(order)
        allidx = np.concatenate([base_idx, order_idx])
        if len(np.unique(allidx)) != len(allidx):
            raise ValueError("prefix_values needs distinct nodes across base and order")
        if not self.common_random_numbers:
            labels = self.graph.labels
            base_l = [labels[i] for i in base_idx]
            return np.array([self(base_l + [labels[i] for i in order_idx[:j]])
                             for j in range(len(order_idx) + 1)])
        base_key = tuple(sorted(int(i) for i in base_idx))
        base_est = self._estimate_key(base_key) if self.memoize else None
        totals = self._runner.prefix_totals(self._randomness(base_key), base_idx, order_idx)
        values = totals / self.num_sims
        with self._lock:
            self.sims_run += self.num_sims
            self.calls += len(order_idx) + (0 if self.memoize else 1)
        if base_est is not None:
            values[0] = base_est.mean
        return values


def make_valuation(g: Graph, model, num_sims: int, base_seed: int, memoize: bool = False,
                   common_random_numbers: bool = True, workers: int = 1) -> ValuationOracle:
    return ValuationOracle(g, model, num_sims, base_seed, memoize=memoize,
                           common_random_numbers=common_random_numbers, workers=workers)
