"""CART classification trees (Gini impurity) as flat arrays.

A tree is stored as five arrays indexed by node: ``feature`` (-1 marks a
leaf), ``threshold``, ``left``, ``right`` and ``counts`` (class counts of the
training rows reaching the node).  All randomness is supplied by the caller:
``feature_keys[node]`` gives a random key per feature and features are tried
in ascending key order, so both implementations grow identical trees.

Split selection follows the usual greedy rule: at least ``max_features``
features are examined, and the search carries on through the remaining
features until some valid split exists.  Among candidate splits the one with
the largest ``sum_c nL_c^2 / nL + sum_c nR_c^2 / nR`` (equivalently the
smallest weighted Gini impurity) wins; ties keep the first candidate found.
"""

from __future__ import annotations

import numpy as np

from .._accel import njit, select


def _alloc(max_nodes: int, n_classes: int):
    return (
        np.full(max_nodes, -1, dtype=np.int64),
        np.zeros(max_nodes),
        np.full(max_nodes, -1, dtype=np.int64),
        np.full(max_nodes, -1, dtype=np.int64),
        np.zeros((max_nodes, n_classes), dtype=np.int64),
    )


# ---------------------------------------------------------------- numpy path


def _best_split_numpy(x, y, rows, n_classes, order, max_features):
    m = rows.size
    best_score = -1.0
    best = (-1, 0.0)
    onehot = np.zeros((m, n_classes), dtype=np.int64)
    tried = 0
    for f in order:
        if tried >= max_features and best[0] >= 0:
            break
        tried += 1
        vals = x[rows, f]
        srt = np.argsort(vals, kind="stable")
        v = vals[srt]
        onehot[:] = 0
        onehot[np.arange(m), y[rows[srt]]] = 1
        left = np.cumsum(onehot, axis=0)[:-1]
        right = left[-1:] + onehot[-1:] - left if m > 1 else left
        valid = v[1:] > v[:-1]
        if not np.any(valid):
            continue
        n_left = np.arange(1, m)
        n_right = m - n_left
        score = (left * left).sum(axis=1) / n_left + (right * right).sum(axis=1) / n_right
        score = np.where(valid, score, -1.0)
        pos = int(np.argmax(score))
        if score[pos] > best_score:
            best_score = float(score[pos])
            best = (int(f), 0.5 * (v[pos] + v[pos + 1]))
    return best


def grow_tree_numpy(x, y, n_classes, rows, feature_keys, max_features):
    max_nodes = 2 * rows.size + 1
    feature, threshold, left, right, counts = _alloc(max_nodes, n_classes)
    node_rows = [rows]
    n_nodes = 1
    stack = [0]
    while stack:
        node = stack.pop()
        r = node_rows[node]
        cnt = np.bincount(y[r], minlength=n_classes)
        counts[node] = cnt
        if r.size < 2 or np.count_nonzero(cnt) < 2:
            continue
        order = np.argsort(feature_keys[node], kind="stable")
        f, thr = _best_split_numpy(x, y, r, n_classes, order, max_features)
        if f < 0:
            continue
        go_left = x[r, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        node_rows.append(r[go_left])
        node_rows.append(r[~go_left])
        # push right first so the left subtree is expanded first
        stack.append(n_nodes + 1)
        stack.append(n_nodes)
        n_nodes += 2
    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], counts[:n_nodes]


def apply_tree_numpy(x, feature, threshold, left, right):
    node = np.zeros(x.shape[0], dtype=np.int64)
    active = feature[node] >= 0
    while np.any(active):
        idx = np.nonzero(active)[0]
        nd = node[idx]
        go_left = x[idx, feature[nd]] <= threshold[nd]
        node[idx] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node


# ---------------------------------------------------------------- numba path


@njit
def _best_split_numba(x, y, rows, n_classes, order, max_features):
    m = rows.shape[0]
    best_score = -1.0
    best_f = -1
    best_thr = 0.0
    left = np.zeros(n_classes, dtype=np.int64)
    total = np.zeros(n_classes, dtype=np.int64)
    for r in rows:
        total[y[r]] += 1
    vals = np.empty(m)
    tried = 0
    for f in order:
        if tried >= max_features and best_f >= 0:
            break
        tried += 1
        for i in range(m):
            vals[i] = x[rows[i], f]
        srt = np.argsort(vals, kind="mergesort")
        left[:] = 0
        sum_left = 0
        sum_right = 0
        for c in range(n_classes):
            sum_right += total[c] * total[c]
        for i in range(m - 1):
            c = y[rows[srt[i]]]
            # (a+1)^2 - a^2 bookkeeping keeps the sums of squares exact
            sum_left += 2 * left[c] + 1
            sum_right -= 2 * (total[c] - left[c]) - 1
            left[c] += 1
            lo = vals[srt[i]]
            hi = vals[srt[i + 1]]
            if hi > lo:
                score = sum_left / (i + 1) + sum_right / (m - i - 1)
                if score > best_score:
                    best_score = score
                    best_f = f
                    best_thr = 0.5 * (lo + hi)
    return best_f, best_thr


@njit
def grow_tree_numba(x, y, n_classes, rows, feature_keys, max_features):
    max_nodes = 2 * rows.shape[0] + 1
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    counts = np.zeros((max_nodes, n_classes), dtype=np.int64)
    # rows of node t live in buf[start[t]:stop[t]]
    buf = rows.copy()
    start = np.zeros(max_nodes, dtype=np.int64)
    stop = np.zeros(max_nodes, dtype=np.int64)
    stop[0] = rows.shape[0]
    stack = np.empty(max_nodes, dtype=np.int64)
    top = 0
    stack[0] = 0
    top = 1
    n_nodes = 1
    tmp = np.empty(rows.shape[0], dtype=np.int64)
    while top > 0:
        top -= 1
        node = stack[top]
        r = buf[start[node]:stop[node]]
        nonzero = 0
        for i in range(r.shape[0]):
            counts[node, y[r[i]]] += 1
        for c in range(n_classes):
            if counts[node, c] > 0:
                nonzero += 1
        if r.shape[0] < 2 or nonzero < 2:
            continue
        order = np.argsort(feature_keys[node], kind="mergesort")
        f, thr = _best_split_numba(x, y, r, n_classes, order, max_features)
        if f < 0:
            continue
        n_left = 0
        for i in range(r.shape[0]):
            if x[r[i], f] <= thr:
                tmp[n_left] = r[i]
                n_left += 1
        k = n_left
        for i in range(r.shape[0]):
            if not x[r[i], f] <= thr:
                tmp[k] = r[i]
                k += 1
        s0 = start[node]
        for i in range(r.shape[0]):
            buf[s0 + i] = tmp[i]
        feature[node] = f
        threshold[node] = thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        start[n_nodes] = s0
        stop[n_nodes] = s0 + n_left
        start[n_nodes + 1] = s0 + n_left
        stop[n_nodes + 1] = stop[node]
        stack[top] = n_nodes + 1
        stack[top + 1] = n_nodes
        top += 2
        n_nodes += 2
    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], counts[:n_nodes]


@njit
def apply_tree_numba(x, feature, threshold, left, right):
    out = np.empty(x.shape[0], dtype=np.int64)
    for i in range(x.shape[0]):
        node = 0
        while feature[node] >= 0:
            if x[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


grow_tree = select(grow_tree_numba, grow_tree_numpy)
apply_tree = select(apply_tree_numba, apply_tree_numpy)
