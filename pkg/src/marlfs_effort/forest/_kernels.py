# Compiled CART regression kernels. Trees are stored as flat node arrays:
# feature[t] == -1 marks a leaf; children are indices into the same arrays.
#
# Rows enter with integer multiplicities (bootstrap counts), which is exactly
# equivalent to growing the tree on the resampled rows with duplicates.
from __future__ import annotations

import numpy as np
from numba import njit

LEAF = -1
# relative slack when comparing split scores; keeps the (feature, threshold)
# tie-break stable against summation-order rounding
TIE_RTOL = 1e-10


@njit(cache=True)
def presort(X):
    m = X.shape[1]
    order = np.empty((m, X.shape[0]), dtype=np.int64)
    for f in range(m):
        order[f] = np.argsort(X[:, f], kind="mergesort")
    return order


@njit(cache=True)
def build_tree(X, y, weights, order, max_depth, min_samples_split, max_features, seed):
    """Grow one tree on rows with ``weights > 0``, each counted ``weights[i]`` times.

    ``order`` is ``presort(X)``. max_depth < 0 means unlimited; max_features >=
    n_features makes every feature a candidate at every node.
    """
    m = X.shape[1]
    XT = np.ascontiguousarray(X.T)
    n_active = 0
    n_total = 0
    for i in range(weights.shape[0]):
        if weights[i] > 0:
            n_active += 1
            n_total += weights[i]
    # per-feature row lists, each segment kept sorted by that feature
    rows = np.empty((m, n_active), dtype=np.int64)
    for f in range(m):
        k = 0
        for j in range(order.shape[1]):
            r = order[f, j]
            if weights[r] > 0:
                rows[f, k] = r
                k += 1
    goes_left = np.zeros(X.shape[0], dtype=np.bool_)
    buf = np.empty(n_active, dtype=np.int64)

    cap = 2 * n_active - 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    n_node = np.zeros(cap, dtype=np.int64)
    sse_node = np.zeros(cap)

    subsample = max_features < m
    if subsample:
        np.random.seed(seed)
    all_features = np.arange(m)

    stack = np.empty((cap, 4), dtype=np.int64)  # node, start, end, depth
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_active
    stack[0, 3] = 0
    top = 1
    count = 1
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]

        wn = 0
        s = 0.0
        for i in range(start, end):
            r = rows[0, i]
            wn += weights[r]
            s += weights[r] * y[r]
        mean = s / wn
        sse = 0.0
        tot = 0.0
        lo = y[rows[0, start]]
        hi = lo
        for i in range(start, end):
            r = rows[0, i]
            d = y[r] - mean
            tot += weights[r] * d
            sse += weights[r] * d * d
            if y[r] < lo:
                lo = y[r]
            if y[r] > hi:
                hi = y[r]
        value[node] = mean
        n_node[node] = wn
        sse_node[node] = sse
        if lo == hi or wn < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue

        if subsample:
            feats = np.sort(np.random.permutation(m)[:max_features])
        else:
            feats = all_features
        best_score = np.inf
        best_f = -1
        best_thr = 0.0
        best_nl = 0
        tol = TIE_RTOL * sse
        for fi in range(feats.shape[0]):
            f = feats[fi]
            wl = 0
            sl = 0.0
            ql = 0.0
            for i in range(start, end - 1):
                r = rows[f, i]
                d = y[r] - mean
                w = weights[r]
                wl += w
                sl += w * d
                ql += w * d * d
                a = XT[f, r]
                b = XT[f, rows[f, i + 1]]
                if a == b:
                    continue
                wr = wn - wl
                sr = tot - sl
                qr = sse - ql
                score = (ql - sl * sl / wl) + (qr - sr * sr / wr)
                if score < best_score - tol:
                    best_score = score
                    best_f = f
                    thr = 0.5 * (a + b)
                    if thr >= b:
                        thr = a
                    best_thr = thr
                    best_nl = i + 1 - start
        if best_f < 0:
            continue

        for i in range(start, end):
            r = rows[best_f, i]
            goes_left[r] = XT[best_f, r] <= best_thr
        for f in range(m):
            nl = 0
            nr = 0
            for i in range(start, end):
                r = rows[f, i]
                if goes_left[r]:
                    rows[f, start + nl] = r
                    nl += 1
                else:
                    buf[nr] = r
                    nr += 1
            for i in range(nr):
                rows[f, start + nl + i] = buf[i]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = count
        right[node] = count + 1
        mid = start + best_nl
        stack[top, 0] = count + 1
        stack[top, 1] = mid
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = count
        stack[top, 1] = start
        stack[top, 2] = mid
        stack[top, 3] = depth + 1
        top += 1
        count += 2
    return (feature[:count].copy(), threshold[:count].copy(), left[:count].copy(),
            right[:count].copy(), value[:count].copy(), n_node[:count].copy(),
            sse_node[:count].copy())


@njit(cache=True)
def predict_rows(feature, threshold, left, right, value, root, X):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = root
        while feature[node] != LEAF:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


@njit(cache=True)
def build_forest(X, y, boot, seeds, max_depth, min_samples_split, max_features):
    """Fit one tree per row of ``boot`` (resampled row indices).

    Node arrays are concatenated, child indices stay tree-local, and
    ``offsets[t]`` is tree t's first node.
    """
    n = X.shape[0]
    n_trees = boot.shape[0]
    order = presort(X)
    cap = n_trees * (2 * n - 1)
    feature = np.empty(cap, dtype=np.int64)
    threshold = np.empty(cap)
    left = np.empty(cap, dtype=np.int64)
    right = np.empty(cap, dtype=np.int64)
    value = np.empty(cap)
    n_node = np.empty(cap, dtype=np.int64)
    sse_node = np.empty(cap)
    offsets = np.zeros(n_trees + 1, dtype=np.int64)
    weights = np.zeros(n, dtype=np.int64)
    pos = 0
    for t in range(n_trees):
        weights[:] = 0
        for j in range(boot.shape[1]):
            weights[boot[t, j]] += 1
        f, th, l, r, v, nn, ss = build_tree(X, y, weights, order, max_depth,
                                            min_samples_split, max_features, seeds[t])
        k = f.shape[0]
        feature[pos:pos + k] = f
        threshold[pos:pos + k] = th
        left[pos:pos + k] = l
        right[pos:pos + k] = r
        value[pos:pos + k] = v
        n_node[pos:pos + k] = nn
        sse_node[pos:pos + k] = ss
        pos += k
        offsets[t + 1] = pos
    return (feature[:pos].copy(), threshold[:pos].copy(), left[:pos].copy(),
            right[:pos].copy(), value[:pos].copy(), n_node[:pos].copy(),
            sse_node[:pos].copy(), offsets)


@njit(cache=True)
def predict_forest_rows(feature, threshold, left, right, value, offsets, X):
    """Per-tree predictions, shape (n_trees, n_rows)."""
    n_trees = offsets.shape[0] - 1
    out = np.empty((n_trees, X.shape[0]))
    for t in range(n_trees):
        o = offsets[t]
        for r in range(X.shape[0]):
            node = 0
            while feature[o + node] != LEAF:
                if X[r, feature[o + node]] <= threshold[o + node]:
                    node = left[o + node]
                else:
                    node = right[o + node]
            out[t, r] = value[o + node]
    return out
