import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critnodes.diffusion import make_valuation
from critnodes.errors import ConfigError, GameSizeError
from critnodes.games import (Allocation, CoalitionGame, banzhaf_exact, banzhaf_mc, permutation_marginals, rank,
                             read_allocation_csv, sample_permutation, shapley_exact, shapley_mc, write_allocation_csv)
from critnodes.graph import erdos_renyi

from conftest import bfs_reach, shapley_by_permutations


def table_game(values: dict) -> CoalitionGame:
    players = sorted({x for s in values for x in s})
    return CoalitionGame(players, lambda s: values.get(frozenset(s), 0.0))


TWO = {frozenset({1}): 1.0, frozenset({2}): 2.0, frozenset({1, 2}): 4.0}


def reach_game(g):
    return CoalitionGame(list(g.labels), lambda s: float(len(bfs_reach(g, s))))


def random_table_game(rng, n):
    players = list(range(n))
    table = {frozenset(): 0.0}
    for r in range(1, n + 1):
        for c in itertools.combinations(players, r):
            table[frozenset(c)] = float(rng.uniform(0, 10))
    return CoalitionGame(players, lambda s: table[frozenset(s)]), table


def test_two_player_exact():
    alloc = shapley_exact(table_game(TWO))
    assert alloc.values == pytest.approx({1: 1.5, 2: 2.5}, abs=1e-12)
    assert shapley_by_permutations([1, 2], table_game(TWO).valuation) == pytest.approx({1: 1.5, 2: 2.5})


def test_p3_reachability_exact(p3):
    game = reach_game(p3)
    oracle = shapley_by_permutations(game.ground, game.valuation)
    assert oracle == pytest.approx({"a": 11 / 6, "b": 5 / 6, "c": 2 / 6}, abs=1e-12)
    assert shapley_exact(game).values == pytest.approx(oracle, abs=1e-12)


def test_additive_game_exact():
    c = {"x": 1.5, "y": -2.0, "z": 4.25}
    game = CoalitionGame(list(c), lambda s: sum(c[i] for i in s))
    assert shapley_exact(game).values == pytest.approx(c, abs=1e-12)


def test_exact_matches_permutation_oracle_on_random_games():
    rng = np.random.default_rng(0)
    for n in range(1, 7):
        game, _ = random_table_game(rng, n)
        assert shapley_exact(game).values == pytest.approx(shapley_by_permutations(game.ground, game.valuation),
                                                           abs=1e-9)


def test_exact_size_guard():
    game = CoalitionGame(list(range(13)), lambda s: float(len(s)))
    with pytest.raises(GameSizeError, match="shapley_mc"):
        shapley_exact(game)
    assert shapley_exact(CoalitionGame(list(range(4)), len), max_players=4).values[0] == pytest.approx(1.0)


def test_exact_one_evaluation_per_coalition():
    seen = []
    game = CoalitionGame(list("abcd"), lambda s: seen.append(s) or float(len(s)))
    shapley_exact(game)
    assert len(seen) == 16 and len(set(seen)) == 16


def test_mc_symmetric_constant_marginals():
    game = table_game({frozenset({1}): 1.0, frozenset({2}): 1.0, frozenset({1, 2}): 2.0})
    for seed in range(5):
        alloc = shapley_mc(game, 7, seed)
        assert alloc.values == {1: 1.0, 2: 1.0}
        assert alloc.stderr == {1: 0.0, 2: 0.0}


def test_mc_single_permutation_telescopes():
    rng = np.random.default_rng(1)
    game, table = random_table_game(rng, 6)
    alloc = shapley_mc(game, 1, 42)
    perm = [game.ground[i] for i in sample_permutation(6, 42, 0)]
    assert alloc.values == permutation_marginals(game, perm)
    assert math.fsum(alloc.values.values()) == pytest.approx(table[frozenset(range(6))], abs=1e-12)
    assert alloc.num_permutations == 1


def test_mc_deterministic_for_seed():
    rng = np.random.default_rng(3)
    game, _ = random_table_game(rng, 5)
    assert shapley_mc(game, 50, 9) == shapley_mc(game, 50, 9)
    with pytest.raises(ConfigError):
        shapley_mc(game, 0, 1)


def test_mc_fast_path_equals_generic_path():
    g = erdos_renyi(9, 0.3, 4, (0.0, 0.6))
    nu = make_valuation(g, "ic", 30, 2)
    fast = shapley_mc(CoalitionGame(list(g.labels), nu), 40, 5)
    generic = shapley_mc(CoalitionGame(list(g.labels), lambda s: nu(s)), 40, 5)
    assert fast == generic


def test_mc_agrees_with_exact_n5():
    g = erdos_renyi(5, 0.5, 7, (0.0, 0.8))
    nu = make_valuation(g, "ic", 200, 1, memoize=True)
    game = CoalitionGame(list(g.labels), nu)
    exact = shapley_exact(game).values
    hits = total = 0
    for trial in range(40):
        alloc = shapley_mc(game, 300, 1000 + trial)
        for x in game.ground:
            total += 1
            hits += abs(alloc.values[x] - exact[x]) <= 3 * alloc.stderr[x] + 1e-9
    assert hits / total >= 0.95


def test_mc_stderr_shrinks_like_inverse_sqrt():
    rng = np.random.default_rng(11)
    game, _ = random_table_game(rng, 6)
    ratios = []
    for seed in range(20):
        a = shapley_mc(game, 100, seed)
        b = shapley_mc(game, 400, seed + 500)
        ratios.append(np.mean([a.stderr[x] / b.stderr[x] for x in game.ground]))
    assert 1.5 <= np.mean(ratios) <= 2.7


def test_banzhaf_additive_and_dummy():
    c = {"x": 2.0, "y": 3.0, "d": 0.0}
    game = CoalitionGame(list(c), lambda s: sum(c[i] for i in s))
    alloc = banzhaf_mc(game, 25, 0)
    assert alloc.values == pytest.approx(c, abs=1e-12)
    assert alloc.values["d"] == 0.0


def test_banzhaf_two_player():
    game = table_game(TWO)
    assert banzhaf_exact(game).values[1] == 1.5
    est = banzhaf_mc(game, 4000, 3)
    assert abs(est.values[1] - 1.5) <= 3 * est.stderr[1]
    assert abs(est.values[2] - 2.5) <= 3 * est.stderr[2]


def test_banzhaf_mc_vs_exact_random_games():
    rng = np.random.default_rng(5)
    game, _ = random_table_game(rng, 5)
    exact = banzhaf_exact(game).values
    est = banzhaf_mc(game, 3000, 8)
    within = sum(abs(est.values[x] - exact[x]) <= 3 * est.stderr[x] for x in game.ground)
    assert within >= 4


def test_rank_examples():
    assert rank(Allocation({"a": 3, "b": 1, "c": 2}), 0).order == ["a", "c", "b"]
    assert rank(Allocation({}), 0).order == []
    orders = {tuple(rank(Allocation({"a": 1.0, "b": 1.0}), s).order) for s in range(40)}
    assert orders == {("a", "b"), ("b", "a")}


def test_rank_tie_reproducible():
    alloc = Allocation({str(i): float(i % 3) for i in range(12)})
    assert rank(alloc, 5).order == rank(alloc, 5).order


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=0, max_size=15), st.integers(1, 1000), st.integers(0, 99))
def test_rank_scale_invariance(vals, scale, seed):
    alloc = Allocation({f"n{i}": v / 4 for i, v in enumerate(vals)})
    scaled = Allocation({x: v * scale for x, v in alloc.values.items()})
    r = rank(alloc, seed)
    assert r.order == rank(scaled, seed).order
    assert sorted(r.order) == sorted(alloc.values)
    ordered = [alloc.values[x] for x in r.order]
    assert all(a >= b for a, b in zip(ordered, ordered[1:]))


def test_allocation_csv_round_trip():
    alloc = Allocation({"a": 1 / 3, "b,c": -2.5}, {"a": 0.1, "b,c": float("nan")}, 10)
    back = read_allocation_csv(write_allocation_csv(alloc))
    assert back.values == alloc.values
    assert back.stderr["a"] == 0.1 and math.isnan(back.stderr["b,c"])
    plain = read_allocation_csv(write_allocation_csv(Allocation({"z": 2.0})))
    assert plain.stderr is None and plain.values == {"z": 2.0}
    with pytest.raises(ConfigError):
        read_allocation_csv("node,value\nq,1\nq,2\n")


def test_duplicate_ground_rejected():
    with pytest.raises(ValueError):
        CoalitionGame([1, 1], len)
