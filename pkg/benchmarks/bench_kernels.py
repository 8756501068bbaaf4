"""Compare the numba and pure-numpy diffusion kernels.

    python3 benchmarks/bench_kernels.py [--n 500] [--p 0.02] [--sims 200] [--repeat 5]

Reports the best-of-repeat time per kernel and checks both backends agree.
The first numba call (JIT compile or cache load) is excluded.
"""
import argparse
import time

import numpy as np

from critnodes.diffusion import DiffusionModel, draw_randomness
from critnodes.graph import erdos_renyi
from critnodes.kernels import get_backend


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--p", type=float, default=0.02)
    ap.add_argument("--sims", type=int, default=200)
    ap.add_argument("--seeds", type=int, default=10, help="seed-set size for the counts kernels")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    g = erdos_renyi(args.n, args.p, 0, (0.0, 0.2))
    lt_g = erdos_renyi(args.n, args.p, 0, (0.0, 1.0 / max(1, int(args.n * args.p * 2))))
    seeds = np.arange(args.seeds, dtype=np.int64)
    order = np.random.default_rng(1).permutation(args.n).astype(np.int64)
    base = np.empty(0, dtype=np.int64)
    coins = draw_randomness(g, DiffusionModel.IC, args.sims, 0)
    theta = draw_randomness(lt_g, DiffusionModel.LT, args.sims, 0)
    print(f"graph n={g.n} m={g.m}, sims={args.sims}, repeat={args.repeat}")

    cases = {
        "ic_counts": lambda k: k.ic_counts(g.out_ptr, g.out_idx, g.out_w, coins, seeds),
        "lt_counts": lambda k: k.lt_counts(lt_g.out_ptr, lt_g.out_idx, lt_g.in_ptr, lt_g.in_idx,
                                           lt_g.in_w, theta, seeds),
        "ic_prefix_totals": lambda k: k.ic_prefix_totals(g.out_ptr, g.out_idx, g.out_w, coins, base, order),
        "lt_prefix_totals": lambda k: k.lt_prefix_totals(lt_g.out_ptr, lt_g.out_idx, lt_g.in_ptr, lt_g.in_idx,
                                                         lt_g.in_w, theta, base, order),
    }
    nb, npy = get_backend("numba"), get_backend("numpy")
    if nb is npy:
        print("numba not importable; only the numpy backend is available")
    print(f"{'kernel':<18}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}  agree")
    for name, call in cases.items():
        call(nb)  # warm-up / compile
        t_nb, r_nb = best_of(lambda: call(nb), args.repeat)
        t_np, r_np = best_of(lambda: call(npy), args.repeat)
        agree = np.array_equal(r_nb, r_np)
        print(f"{name:<18}{t_nb * 1e3:>10.2f}{t_np * 1e3:>10.2f}{t_np / t_nb:>8.1f}x  {agree}")


if __name__ == "__main__":
    main()
