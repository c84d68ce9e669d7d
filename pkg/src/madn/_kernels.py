"""Compiled inner loops: seeded RNG, degree-preserving swaps, triad censuses, skip-gram SGD.

Every routine draws randomness from an explicit splitmix64 state so results
depend only on the seed passed in, never on thread scheduling.
"""
import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # old system TBB builds only produce a warning before numba falls back anyway
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


@njit(inline="always")
def next_u64(state):
    z = state[0] + _GOLDEN
    state[0] = z
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(inline="always")
def next_float(state):
    return np.float64(next_u64(state) >> np.uint64(11)) * _INV53


@njit(inline="always")
def next_below(state, n):
    r = np.int64(next_float(state) * n)
    return r if r < n else n - 1


# --------------------------------------------------------------------------
# degree-preserving rewiring
# --------------------------------------------------------------------------

@njit(cache=True)
def rewire_inplace(src, dst, adj, state, n_swaps, max_attempts):
    """Double-edge swaps (a->b, c->d) -> (a->d, c->b) until ``n_swaps`` succeed.

    ``adj`` must mirror the edge arrays and is kept in sync. Swaps that would
    create a self-loop or a duplicate link are rejected. Returns the number of
    successful swaps, which falls short of ``n_swaps`` only when
    ``max_attempts`` ran out.
    """
    m = src.shape[0]
    done = 0
    attempts = 0
    if m < 2:
        return 0
    while done < n_swaps and attempts < max_attempts:
        attempts += 1
        i = next_below(state, m)
        j = next_below(state, m)
        a = src[i]
        b = dst[i]
        c = src[j]
        d = dst[j]
        if a == c or b == d or a == d or c == b:
            continue
        if adj[a, d] != 0 or adj[c, b] != 0:
            continue
        adj[a, b] = 0
        adj[c, d] = 0
        adj[a, d] = 1
        adj[c, b] = 1
        dst[i] = d
        dst[j] = b
        done += 1
    return done


# --------------------------------------------------------------------------
# censuses
# --------------------------------------------------------------------------

@njit(cache=True)
def triad_census_adj(adj, table, n_classes):
    """Class counts over all node triples; ``table`` maps a 6-bit triad code to a class index or -1."""
    n = adj.shape[0]
    counts = np.zeros(n_classes, dtype=np.int64)
    for u in range(n):
        for v in range(u + 1, n):
            uv = np.int64(adj[u, v]) | (np.int64(adj[v, u]) << 1)
            for w in range(v + 1, n):
                code = uv | (np.int64(adj[u, w]) << 2) | (np.int64(adj[w, u]) << 3) \
                    | (np.int64(adj[v, w]) << 4) | (np.int64(adj[w, v]) << 5)
                cls = table[code]
                if cls >= 0:
                    counts[cls] += 1
    return counts


@njit(cache=True)
def colored_census_adj(adj, table, n_classes):
    """Like :func:`triad_census_adj` with 2-bit pair states (bit 0 attention, bit 1 disregard)."""
    n = adj.shape[0]
    counts = np.zeros(n_classes, dtype=np.int64)
    for u in range(n):
        for v in range(u + 1, n):
            uv = np.int64(adj[u, v]) | (np.int64(adj[v, u]) << 2)
            for w in range(v + 1, n):
                code = uv | (np.int64(adj[u, w]) << 4) | (np.int64(adj[w, u]) << 6) \
                    | (np.int64(adj[v, w]) << 8) | (np.int64(adj[w, v]) << 10)
                cls = table[code]
                if cls >= 0:
                    counts[cls] += 1
    return counts


@njit(cache=True)
def _fill(adj, src, dst, value):
    for e in range(src.shape[0]):
        adj[src[e], dst[e]] = value


@njit(cache=True, parallel=True)
def null_triad_counts(src0, dst0, n, seeds, n_swaps, max_attempts, table, n_classes):
    """Census of one rewired copy of the network per seed. Returns ``(counts, swaps_done)``.

    Samples run in parallel; each owns its buffers and RNG state, so the
    result does not depend on the thread count.
    """
    n_samples = seeds.shape[0]
    out = np.zeros((n_samples, n_classes), dtype=np.int64)
    swaps = np.zeros(n_samples, dtype=np.int64)
    for s in prange(n_samples):
        src = src0.copy()
        dst = dst0.copy()
        state = np.zeros(1, dtype=np.uint64)
        adj = np.zeros((n, n), dtype=np.uint8)
        _fill(adj, src, dst, 1)
        state[0] = seeds[s]
        swaps[s] = rewire_inplace(src, dst, adj, state, n_swaps, max_attempts)
        out[s, :] = triad_census_adj(adj, table, n_classes)
    return out, swaps


@njit(cache=True, parallel=True)
def null_colored_counts(src_a0, dst_a0, src_d0, dst_d0, n, seeds_a, seeds_d,
                        swaps_a, swaps_d, max_a, max_d, table, n_classes):
    """Colored census of rewired copies; each layer is rewired on its own stream."""
    n_samples = seeds_a.shape[0]
    out = np.zeros((n_samples, n_classes), dtype=np.int64)
    done = np.zeros((n_samples, 2), dtype=np.int64)
    for s in prange(n_samples):
        src_a = src_a0.copy()
        dst_a = dst_a0.copy()
        src_d = src_d0.copy()
        dst_d = dst_d0.copy()
        state = np.zeros(1, dtype=np.uint64)
        adj_a = np.zeros((n, n), dtype=np.uint8)
        adj_d = np.zeros((n, n), dtype=np.uint8)
        _fill(adj_a, src_a, dst_a, 1)
        _fill(adj_d, src_d, dst_d, 1)
        state[0] = seeds_a[s]
        done[s, 0] = rewire_inplace(src_a, dst_a, adj_a, state, swaps_a, max_a)
        state[0] = seeds_d[s]
        done[s, 1] = rewire_inplace(src_d, dst_d, adj_d, state, swaps_d, max_d)
        out[s, :] = colored_census_adj(adj_a + adj_d * np.uint8(2), table, n_classes)
    return out, done


# --------------------------------------------------------------------------
# skip-gram with negative sampling
# --------------------------------------------------------------------------

@njit(inline="always")
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def sgns_epoch(walks, lengths, w_in, w_out, neg_cdf, window, negatives, lr0, lr_min,
               step0, total_steps, state):
    """One sequential pass of skip-gram negative-sampling SGD over the walk corpus.

    For each (center, context) pair the loss is
    ``-log s(u_ctx . v_c) - sum_neg log s(-u_neg . v_c)``; the learning rate
    decays linearly with the global token counter. Returns
    ``(loss_sum, n_pairs, next_step)``.
    """
    d = w_in.shape[1]
    grad_v = np.zeros(d)
    loss_sum = 0.0
    n_pairs = 0
    step = step0
    for wi in range(walks.shape[0]):
        length = lengths[wi]
        for pos in range(length):
            lr = lr0 * (1.0 - step / total_steps)
            if lr < lr_min:
                lr = lr_min
            step += 1
            center = walks[wi, pos]
            lo = max(0, pos - window)
            hi = min(length, pos + window + 1)
            for cpos in range(lo, hi):
                if cpos == pos:
                    continue
                ctx = walks[wi, cpos]
                grad_v[:] = 0.0
                for k in range(negatives + 1):
                    if k == 0:
                        target = ctx
                        label = 1.0
                    else:
                        target = np.searchsorted(neg_cdf, next_float(state), side="right")
                        if target >= neg_cdf.shape[0]:
                            target = neg_cdf.shape[0] - 1
                        label = 0.0
                    score = 0.0
                    for j in range(d):
                        score += w_in[center, j] * w_out[target, j]
                    sig = _sigmoid(score)
                    if label == 1.0:
                        loss_sum -= np.log(max(sig, 1e-300))
                    else:
                        loss_sum -= np.log(max(1.0 - sig, 1e-300))
                    g = sig - label  # d loss / d score
                    for j in range(d):
                        grad_v[j] += g * w_out[target, j]
                        w_out[target, j] -= lr * g * w_in[center, j]
                for j in range(d):
                    w_in[center, j] -= lr * grad_v[j]
                n_pairs += 1
    return loss_sum, n_pairs, step


@njit(cache=True)
def sgns_loss(walks, lengths, w_in, w_out, neg_cdf, window, negatives, state):
    """Mean skip-gram negative-sampling loss over the corpus with parameters held fixed."""
    d = w_in.shape[1]
    loss_sum = 0.0
    n_pairs = 0
    for wi in range(walks.shape[0]):
        length = lengths[wi]
        for pos in range(length):
            center = walks[wi, pos]
            lo = max(0, pos - window)
            hi = min(length, pos + window + 1)
            for cpos in range(lo, hi):
                if cpos == pos:
                    continue
                for k in range(negatives + 1):
                    if k == 0:
                        target = walks[wi, cpos]
                    else:
                        target = np.searchsorted(neg_cdf, next_float(state), side="right")
                        if target >= neg_cdf.shape[0]:
                            target = neg_cdf.shape[0] - 1
                    score = 0.0
                    for j in range(d):
                        score += w_in[center, j] * w_out[target, j]
                    sig = _sigmoid(score)
                    if k == 0:
                        loss_sum -= np.log(max(sig, 1e-300))
                    else:
                        loss_sum -= np.log(max(1.0 - sig, 1e-300))
                n_pairs += 1
    return loss_sum / max(n_pairs, 1)
