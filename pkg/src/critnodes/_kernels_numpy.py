"""Pure-numpy diffusion kernels, vectorized across simulations.

Same signatures and bit-identical results as ``_kernels_numba``. Propagation
proceeds in synchronous rounds over an ``(sims, n)`` boolean state; both
formulations reach the same least fixpoint because activation is monotone.
"""

import numpy as np


def _edge_src(out_ptr):
    n = len(out_ptr) - 1
    return np.repeat(np.arange(n, dtype=np.int64), np.diff(out_ptr))


def _ic_close(src, dst, live, active, frontier):
    sims, n = active.shape
    while frontier.any():
        hit = frontier[:, src] & live
        rows, cols = np.nonzero(hit)
        new = np.zeros((sims, n), dtype=bool)
        new[rows, dst[cols]] = True
        new &= ~active
        active |= new
        frontier = new
    return active


def _padded_in(in_ptr, in_idx, in_w):
    # (n, D) neighbor/weight tables in in-CSR order; padding points at a
    # sentinel column n that is never active.
    n = len(in_ptr) - 1
    deg = np.diff(in_ptr)
    d = int(deg.max()) if n else 0
    idx = np.full((n, d), n, dtype=np.int64)
    w = np.zeros((n, d), dtype=np.float64)
    for j in range(d):
        has = deg > j
        pos = in_ptr[:-1][has] + j
        idx[has, j] = in_idx[pos]
        w[has, j] = in_w[pos]
    return idx, w


def _lt_close(pad_idx, pad_w, theta, active):
    sims, n = active.shape
    ext = np.zeros((sims, n + 1), dtype=bool)
    while True:
        ext[:, :n] = active
        s = np.zeros((sims, n), dtype=np.float64)
        for j in range(pad_idx.shape[1]):
            # Adding 0.0 for inactive neighbors leaves the running sum bit-identical
            # to the numba loop, which skips them.
            s = s + np.where(ext[:, pad_idx[:, j]], pad_w[:, j], 0.0)
        new = ~active & (s >= theta)
        if not new.any():
            return active
        active |= new


def _seed_mask(sims, n, seeds):
    active = np.zeros((sims, n), dtype=bool)
    active[:, np.asarray(seeds, dtype=np.int64)] = True
    return active


def ic_active(out_ptr, out_idx, out_w, coins, seeds):
    return ic_counts_masks(out_ptr, out_idx, out_w, coins[None, :], seeds)[0]


def ic_counts_masks(out_ptr, out_idx, out_w, coins, seeds):
    sims, n = coins.shape[0], len(out_ptr) - 1
    active = _seed_mask(sims, n, seeds)
    live = coins < out_w[None, :]
    return _ic_close(_edge_src(out_ptr), out_idx, live, active, active.copy())


def ic_counts(out_ptr, out_idx, out_w, coins, seeds):
    return ic_counts_masks(out_ptr, out_idx, out_w, coins, seeds).sum(axis=1).astype(np.int64)


def lt_active(out_ptr, out_idx, in_ptr, in_idx, in_w, theta, seeds):
    return lt_counts_masks(out_ptr, out_idx, in_ptr, in_idx, in_w, theta[None, :], seeds)[0]


def lt_counts_masks(out_ptr, out_idx, in_ptr, in_idx, in_w, theta, seeds):
    sims, n = theta.shape[0], len(out_ptr) - 1
    pad_idx, pad_w = _padded_in(in_ptr, in_idx, in_w)
    return _lt_close(pad_idx, pad_w, theta, _seed_mask(sims, n, seeds))


def lt_counts(out_ptr, out_idx, in_ptr, in_idx, in_w, theta, seeds):
    return lt_counts_masks(out_ptr, out_idx, in_ptr, in_idx, in_w, theta, seeds).sum(axis=1).astype(np.int64)


def ic_prefix_totals(out_ptr, out_idx, out_w, coins, base, order):
    """Summed active counts after seeding ``base`` then each ``order`` prefix."""
    src = _edge_src(out_ptr)
    live = coins < out_w[None, :]
    sims, n = coins.shape[0], len(out_ptr) - 1
    active = _seed_mask(sims, n, base)
    active = _ic_close(src, out_idx, live, active, active.copy())
    totals = np.zeros(len(order) + 1, dtype=np.int64)
    totals[0] = active.sum()
    for j, u in enumerate(order):
        frontier = np.zeros_like(active)
        frontier[:, u] = ~active[:, u]
        active[:, u] = True
        active = _ic_close(src, out_idx, live, active, frontier)
        totals[j + 1] = active.sum()
    return totals


def lt_prefix_totals(out_ptr, out_idx, in_ptr, in_idx, in_w, theta, base, order):
    pad_idx, pad_w = _padded_in(in_ptr, in_idx, in_w)
    sims, n = theta.shape[0], len(out_ptr) - 1
    active = _lt_close(pad_idx, pad_w, theta, _seed_mask(sims, n, base))
    totals = np.zeros(len(order) + 1, dtype=np.int64)
    totals[0] = active.sum()
    for j, u in enumerate(order):
        active[:, u] = True
        active = _lt_close(pad_idx, pad_w, theta, active)
        totals[j + 1] = active.sum()
    return totals
