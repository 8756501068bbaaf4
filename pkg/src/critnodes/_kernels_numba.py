"""Numba-compiled diffusion kernels.

Each kernel runs a block of simulations sequentially and releases the GIL, so
callers can split the simulation range across threads. Results are integer
counts, which makes any reduction order exact.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _ic_extend(out_ptr, out_idx, out_w, coins, active, stack, u):
    # Seed u and propagate over live edges (coin < weight). Returns newly active count.
    if active[u]:
        return 0
    active[u] = True
    stack[0] = u
    top = 1
    cnt = 1
    while top > 0:
        top -= 1
        v = stack[top]
        for e in range(out_ptr[v], out_ptr[v + 1]):
            x = out_idx[e]
            if not active[x] and coins[e] < out_w[e]:
                active[x] = True
                stack[top] = x
                top += 1
                cnt += 1
    return cnt


@njit(cache=True, nogil=True)
def _lt_reaches(in_ptr, in_idx, in_w, theta, active, x):
    s = 0.0
    for f in range(in_ptr[x], in_ptr[x + 1]):
        if active[in_idx[f]]:
            s += in_w[f]
    return s >= theta[x]


@njit(cache=True, nogil=True)
def _lt_extend(out_ptr, out_idx, in_ptr, in_idx, in_w, theta, active, stack, u):
    # The in-weight sum is recomputed in in-CSR order on every check so the
    # outcome depends only on the active set, never on activation order.
    if active[u]:
        return 0
    active[u] = True
    stack[0] = u
    top = 1
    cnt = 1
    while top > 0:
        top -= 1
        v = stack[top]
        for e in range(out_ptr[v], out_ptr[v + 1]):
            x = out_idx[e]
            if not active[x] and _lt_reaches(in_ptr, in_idx, in_w, theta, active, x):
                active[x] = True
                stack[top] = x
                top += 1
                cnt += 1
    return cnt


@njit(cache=True, nogil=True)
def ic_active(out_ptr, out_idx, out_w, coins, seeds):
    n = len(out_ptr) - 1
    active = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    for u in seeds:
        _ic_extend(out_ptr, out_idx, out_w, coins, active, stack, u)
    return active


@njit(cache=True, nogil=True)
def lt_active(out_ptr, out_idx, in_ptr, in_idx, in_w, theta, seeds):
    n = len(out_ptr) - 1
    active = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    for u in seeds:
        _lt_extend(out_ptr, out_idx, in_ptr, in_idx, in_w, theta, active, stack, u)
    return active


@njit(cache=True, nogil=True)
def ic_counts(out_ptr, out_idx, out_w, coins, seeds):
    n = len(out_ptr) - 1
    sims = coins.shape[0]
    counts = np.zeros(sims, dtype=np.int64)
    active = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    for s in range(sims):
        active[:] = False
        c = 0
        for u in seeds:
            c += _ic_extend(out_ptr, out_idx, out_w, coins[s], active, stack, u)
        counts[s] = c
    return counts


@njit(cache=True, nogil=True)
def lt_counts(out_ptr, out_idx, in_ptr, in_idx, in_w, theta, seeds):
    n = len(out_ptr) - 1
    sims = theta.shape[0]
    counts = np.zeros(sims, dtype=np.int64)
    active = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    for s in range(sims):
        active[:] = False
        c = 0
        for u in seeds:
            c += _lt_extend(out_ptr, out_idx, in_ptr, in_idx, in_w, theta[s], active, stack, u)
        counts[s] = c
    return counts


@njit(cache=True, nogil=True)
def ic_prefix_totals(out_ptr, out_idx, out_w, coins, base, order):
    """Summed active counts after seeding ``base`` then each ``order`` prefix."""
    n = len(out_ptr) - 1
    sims = coins.shape[0]
    totals = np.zeros(len(order) + 1, dtype=np.int64)
    active = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    for s in range(sims):
        active[:] = False
        c = 0
        row = coins[s]
        for u in base:
            c += _ic_extend(out_ptr, out_idx, out_w, row, active, stack, u)
        totals[0] += c
        for j in range(len(order)):
            c += _ic_extend(out_ptr, out_idx, out_w, row, active, stack, order[j])
            totals[j + 1] += c
    return totals


@njit(cache=True, nogil=True)
def lt_prefix_totals(out_ptr, out_idx, in_ptr, in_idx, in_w, theta, base, order):
    n = len(out_ptr) - 1
    sims = theta.shape[0]
    totals = np.zeros(len(order) + 1, dtype=np.int64)
    active = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    for s in range(sims):
        active[:] = False
        c = 0
        row = theta[s]
        for u in base:
            c += _lt_extend(out_ptr, out_idx, in_ptr, in_idx, in_w, row, active, stack, u)
        totals[0] += c
        for j in range(len(order)):
            c += _lt_extend(out_ptr, out_idx, in_ptr, in_idx, in_w, row, active, stack, order[j])
            totals[j + 1] += c
    return totals
