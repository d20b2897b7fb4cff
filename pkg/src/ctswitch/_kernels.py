"""Compiled inner loops for the dense switcher engine.

Each tree is a dense heap-ordered array of nodes: node 0 is the root and the
child of node n along symbol a is ``n * A + a + 1``.  Storage is
tree-minor (``counts[node, symbol, tree]``) so the loops over trees are
contiguous.  Per-tree floating point operations follow exactly the order
used in ``predictor`` so both engines agree bit for bit; reductions over
trees run in ascending start order.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _node_on_path(hist, t, pad, A, depth, start):
    n = 0
    for k in range(1, depth + 1):
        pos = t - k
        sym = hist[pos] if pos >= start else pad
        n = n * A + sym + 1
    return n


@njit(cache=True)
def level_probs(counts, gpost, beta, starts, n_trees, hist, t, pad, d, levels, den):
    """levels[k, a, i] = q~ of symbol a at the depth-k path node of tree i."""
    A = beta.shape[1]
    # trees whose whole context lies inside their segment share one path
    shared = 0
    while shared < n_trees and starts[shared] <= t - d:
        shared += 1
    for k in range(d, -1, -1):
        n = _node_on_path(hist, t, pad, A, k, 0)
        _level(counts, gpost, beta, levels, den, n, k, d, 0, shared, A)
        for i in range(shared, n_trees):
            m = _node_on_path(hist, t, pad, A, k, starts[i])
            _level(counts, gpost, beta, levels, den, m, k, d, i, i + 1, A)


@njit(cache=True)
def _level(counts, gpost, beta, levels, den, n, k, d, lo, hi, A):
    for i in range(lo, hi):
        den[i] = 0.0
    for j in range(A):
        bj = beta[n, j]
        cj = counts[n, j]
        for i in range(lo, hi):
            den[i] += bj + cj[i]
    g = gpost[n]
    for a in range(A):
        ba = beta[n, a]
        ca = counts[n, a]
        out = levels[k, a]
        if k == d:
            for i in range(lo, hi):
                out[i] = (ba + ca[i]) / den[i]
        else:
            child = levels[k + 1, a]
            for i in range(lo, hi):
                out[i] = (1.0 - g[i]) * ((ba + ca[i]) / den[i]) + g[i] * child[i]


@njit(cache=True)
def absorb(counts, gpost, starts, n_trees, hist, t, pad, d, x, levels):
    """Add symbol x, observed at position t, to every tree using precomputed levels."""
    A = counts.shape[1]
    shared = 0
    while shared < n_trees and starts[shared] <= t - d:
        shared += 1
    for k in range(d + 1):
        n = _node_on_path(hist, t, pad, A, k, 0)
        _update(counts, gpost, levels, n, k, d, x, 0, shared)
        for i in range(shared, n_trees):
            m = _node_on_path(hist, t, pad, A, k, starts[i])
            _update(counts, gpost, levels, m, k, d, x, i, i + 1)


@njit(cache=True)
def _update(counts, gpost, levels, n, k, d, x, lo, hi):
    c = counts[n, x]
    if k < d:
        g = gpost[n]
        here = levels[k, x]
        below = levels[k + 1, x]
        for i in range(lo, hi):
            g[i] = g[i] * below[i] / here[i]
    for i in range(lo, hi):
        c[i] += 1.0


@njit(cache=True)
def mix(v, probs, n_trees, out):
    """out[a] = sum_i v[i] * probs[a, i], summed in tree order."""
    A = probs.shape[0]
    for a in range(A):
        row = probs[a]
        acc = 0.0
        for i in range(n_trees):
            acc += v[i] * row[i]
        out[a] = acc


@njit(cache=True)
def reweight(v, q, n_trees, alpha, p):
    for i in range(n_trees):
        v[i] = (1.0 - alpha) * q[i] * v[i] / p


@njit(cache=True)
def ordered_sum(v, n):
    acc = 0.0
    for i in range(n):
        acc += v[i]
    return acc


@njit(cache=True)
def weighted_sum(v, q, n):
    acc = 0.0
    for i in range(n):
        acc += v[i] * q[i]
    return acc
