import itertools
from collections import deque

import numpy as np
import pytest

from critnodes.graph import Graph, load_edge_list


@pytest.fixture
def p3():
    return load_edge_list("a\tb\t1.0\nb\tc\t1.0\n")


@pytest.fixture
def s4():
    return load_edge_list("h\tl1\t1.0\nh\tl2\t1.0\nh\tl3\t1.0\n")


@pytest.fixture
def weighted_star():
    return load_edge_list("h\tl1\t0.9\nh\tl2\t0.5\nh\tl3\t0.1\n")


def random_graph(rng: np.random.Generator, n: int, p: float, wmax: float = 1.0) -> Graph:
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    return Graph([f"v{i}" for i in range(n)], src, dst, rng.uniform(0, wmax, len(src)))


def random_lt_graph(rng: np.random.Generator, n: int, p: float) -> Graph:
    """Random graph whose in-weights sum to at most 1 per node."""
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    w = rng.random(len(src))
    indeg = np.bincount(dst, minlength=n)
    w = w / np.maximum(indeg[dst], 1) * rng.uniform(0.5, 1.0)
    return Graph([f"v{i}" for i in range(n)], src, dst, w)


def bfs_reach(g: Graph, seeds) -> set:
    """Plain reachability over the labeled edge list."""
    adj = {}
    for a, b, _ in g.edges():
        adj.setdefault(a, []).append(b)
    seen = set(seeds)
    queue = deque(seeds)
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def reference_lt(g: Graph, seeds, theta: dict) -> set:
    """Round-based LT fixpoint written directly from the activation rule."""
    incoming = {x: [] for x in g.labels}
    for a, b, w in g.edges():
        incoming[b].append((a, w))
    active = set(seeds)
    changed = True
    while changed:
        changed = False
        for x in g.labels:
            if x not in active and sum(w for a, w in incoming[x] if a in active) >= theta[x]:
                active.add(x)
                changed = True
    return active


def shapley_by_permutations(players, value) -> dict:
    """Average marginal contribution over all n! orderings."""
    totals = {x: 0.0 for x in players}
    count = 0
    for perm in itertools.permutations(players):
        count += 1
        pred = frozenset()
        for x in perm:
            totals[x] += value(pred | {x}) - value(pred)
            pred = pred | {x}
    return {x: totals[x] / count for x in players}
