"""Compiled inner loops: counter-based streams, index draws, built-in statistics.

Every replicate owns a stream keyed by ``(seed, replicate index)``; its
draws are ``mix64(key + (c + 1) * GOLDEN)`` for counters ``c = 0, 1, ...``.
Nothing here depends on thread count or scheduling order.
"""

import os
import warnings

import numba as nb
import numpy as np
from numba.core.errors import NumbaWarning

# numba probes TBB first and complains about old versions before falling back
warnings.filterwarnings("ignore", message="The TBB threading layer", category=NumbaWarning)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SALT = np.uint64(0x5851F42D4C957F2D)

# reserved stream for evaluating the statistic on the full data set
FULL_DATA_STREAM = np.uint64(0xFFFFFFFFFFFFFFFF)

STAT_MAX = 0
STAT_MEAN = 1
STAT_SHORTH = 2
STAT_XICOR = 3
STAT_MU1 = 4
STAT_LAMBDA = 5


def apply_thread_cap():
    """Honour ``MOONBOOT_THREADS`` as an upper bound on numba worker threads."""
    raw = os.environ.get("MOONBOOT_THREADS")
    if not raw:
        return nb.get_num_threads()
    try:
        cap = int(raw)
    except ValueError:
        return nb.get_num_threads()
    cap = max(1, min(cap, nb.config.NUMBA_NUM_THREADS))
    nb.set_num_threads(cap)
    return cap


@nb.njit(cache=True)
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def stream_key(seed, stream):
    return mix64(mix64(seed ^ _SALT) + (stream + np.uint64(1)) * _GOLDEN)


@nb.njit(cache=True)
def raw_draw(key, ctr):
    return mix64(key + np.uint64(ctr + 1) * _GOLDEN)


@nb.njit(cache=True)
def bounded(key, ctr, k):
    # uniform integer in [0, k), k < 2**32, by Lemire's multiply-shift with
    # rejection; returns (value, next counter)
    ku = np.uint64(k)
    while True:
        x = raw_draw(key, ctr) >> np.uint64(32)
        ctr += 1
        prod = x * ku
        low = prod & np.uint64(0xFFFFFFFF)
        if low < ku:
            thresh = (np.uint64(0x100000000) - ku) % ku
            if low < thresh:
                continue
        return np.int64(prod >> np.uint64(32)), ctr


@nb.njit(cache=True)
def uniform01(key, ctr):
    x = raw_draw(key, ctr)
    return np.float64(x >> np.uint64(11)) * (1.0 / 9007199254740992.0), ctr + 1


@nb.njit(cache=True)
def draw_into(key, n, m, replace, perm, swaps, out):
    """Fill ``out[:m]`` with row positions; ``perm`` must be the identity on entry
    and is restored to it on exit. Returns the next unused counter."""
    ctr = 0
    if replace:
        for j in range(m):
            v, ctr = bounded(key, ctr, n)
            out[j] = v
        return ctr
    for j in range(m):
        r, ctr = bounded(key, ctr, n - j)
        r += j
        swaps[j] = r
        t = perm[j]
        perm[j] = perm[r]
        perm[r] = t
        out[j] = perm[j]
    for j in range(m - 1, -1, -1):
        r = swaps[j]
        t = perm[j]
        perm[j] = perm[r]
        perm[r] = t
    return ctr


@nb.njit(cache=True)
def draw_one(seed, stream, n, m, replace):
    perm = np.arange(n)
    swaps = np.empty(m, np.int64)
    out = np.empty(m, np.int64)
    draw_into(stream_key(seed, stream), n, m, replace, perm, swaps, out)
    return out


@nb.njit(parallel=True, cache=True)
def draw_matrix(seed, n, m, replace, R, nblocks):
    out = np.empty((R, m), np.int64)
    per = (R + nblocks - 1) // nblocks
    for b in nb.prange(nblocks):
        lo = b * per
        hi = min(R, lo + per)
        perm = np.arange(n)
        swaps = np.empty(m, np.int64)
        row = np.empty(m, np.int64)
        for i in range(lo, hi):
            draw_into(stream_key(seed, np.uint64(i)), n, m, replace, perm, swaps, row)
            out[i, :] = row
    return out


# ---------------------------------------------------------------------------
# built-in statistics; univariate ones read column 0


@nb.njit(cache=True)
def k_max(values, idx):
    best = values[idx[0], 0]
    for i in range(1, idx.size):
        v = values[idx[i], 0]
        if v > best:
            best = v
    return best


@nb.njit(cache=True)
def k_mean(values, idx):
    s = 0.0
    for i in range(idx.size):
        s += values[idx[i], 0]
    return s / idx.size


@nb.njit(cache=True)
def k_shorth(values, idx, buf):
    k = idx.size
    b = buf[:k]
    for i in range(k):
        b[i] = values[idx[i], 0]
    b.sort()
    return shorth_sorted(b)


@nb.njit(cache=True)
def shorth_sorted(b):
    k = b.size
    h = (k + 1) // 2
    best = 0
    width = b[h - 1] - b[0]
    for i in range(1, k - h + 1):
        w = b[i + h - 1] - b[i]
        if w < width:
            width = w
            best = i
    s = 0.0
    for j in range(best, best + h):
        s += b[j]
    return s / h


@nb.njit(cache=True)
def k_xicor(values, idx, key, ctr):
    k = idx.size
    xs = np.empty(k)
    ys = np.empty(k)
    for i in range(k):
        xs[i] = values[idx[i], 0]
        ys[i] = values[idx[i], 1]
    order = np.argsort(xs, kind="mergesort")
    # ties in x are broken uniformly at random from the caller's stream
    i = 0
    while i < k:
        j = i + 1
        while j < k and xs[order[j]] == xs[order[i]]:
            j += 1
        for t in range(j - i - 1, 0, -1):
            r, ctr = bounded(key, ctr, t + 1)
            tmp = order[i + t]
            order[i + t] = order[i + r]
            order[i + r] = tmp
        i = j
    ysorted = np.sort(ys)
    tied = False
    for t in range(k - 1):
        if ysorted[t] == ysorted[t + 1]:
            tied = True
            break
    # r_i = #{j : y_j <= y_i} along the x-order
    prev = np.searchsorted(ysorted, ys[order[0]], side="right")
    s = 0
    for t in range(1, k):
        cur = np.searchsorted(ysorted, ys[order[t]], side="right")
        s += abs(cur - prev)
        prev = cur
    if not tied:
        return 1.0 - 3.0 * s / (k * k - 1)
    denom = 0
    for t in range(k):
        le = k - np.searchsorted(ysorted, ys[t], side="left")
        denom += le * (k - le)
    if denom == 0:
        return np.nan
    return 1.0 - k * s / (2.0 * denom)


@nb.njit(cache=True)
def k_mu1(values, idx):
    return values[idx[0], 0]


@nb.njit(cache=True)
def k_lambda(values, idx):
    k = idx.size
    s = 0.0
    for i in range(k):
        s += values[idx[i], 0]
    mean = s / k
    ss = 0.0
    for i in range(k):
        d = values[idx[i], 0] - mean
        ss += d * d
    return s - ss


@nb.njit(cache=True)
def evaluate(code, values, idx, buf, key, ctr):
    if code == STAT_MAX:
        return k_max(values, idx)
    if code == STAT_MEAN:
        return k_mean(values, idx)
    if code == STAT_SHORTH:
        return k_shorth(values, idx, buf)
    if code == STAT_XICOR:
        return k_xicor(values, idx, key, ctr)
    if code == STAT_MU1:
        return k_mu1(values, idx)
    if code == STAT_LAMBDA:
        return k_lambda(values, idx)
    return np.nan


@nb.njit(cache=True)
def evaluate_indices(code, values, idx, seed, stream):
    buf = np.empty(idx.size)
    return evaluate(code, values, idx, buf, stream_key(seed, stream), 0)


@nb.njit(cache=True)
def sorted_by_scan(idx, rank, sorted_col, counts, buf, distinct):
    # counting pass over ranks yields the same sorted multiset as a sort
    for i in range(idx.size):
        counts[rank[idx[i]]] += 1
    p = 0
    if distinct:
        # counts are 0/1: branch-free compaction (buf has one slot of slack)
        for t in range(counts.size):
            buf[p] = sorted_col[t]
            p += counts[t]
            counts[t] = 0
        return buf[:p]
    for t in range(counts.size):
        c = counts[t]
        if c:
            v = sorted_col[t]
            for _ in range(c):
                buf[p] = v
                p += 1
            counts[t] = 0
    return buf[:p]


def use_scan(code, n, m):
    """Whether shorth replicates should be ordered by a rank scan instead of a sort."""
    return code == STAT_SHORTH and m * max(1, int(np.log2(m))) > n


@nb.njit(parallel=True, cache=True)
def replicates(code, values, sorted_col, rank, m, replace, seed, R, nblocks):
    """R replicate values of a built-in statistic.

    ``sorted_col``/``rank`` (column 0 sorted, and each row's position in it)
    switch shorth to the counting scan; pass empty arrays otherwise.
    """
    n = values.shape[0]
    scan = sorted_col.size == n and n > 0
    out = np.empty(R)
    per = (R + nblocks - 1) // nblocks
    for b in nb.prange(nblocks):
        lo = b * per
        hi = min(R, lo + per)
        perm = np.arange(n)
        swaps = np.empty(m, np.int64)
        idx = np.empty(m, np.int64)
        buf = np.empty(m + 1)
        counts = np.zeros(n if scan else 0, np.int32)
        for i in range(lo, hi):
            key = stream_key(seed, np.uint64(i))
            ctr = draw_into(key, n, m, replace, perm, swaps, idx)
            if scan:
                out[i] = shorth_sorted(
                    sorted_by_scan(idx, rank, sorted_col, counts, buf, not replace)
                )
            else:
                out[i] = evaluate(code, values, idx, buf, key, ctr)
    return out


def n_blocks(R):
    return max(1, min(R, 4 * nb.get_num_threads()))
