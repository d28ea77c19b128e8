"""Numba kernels for tree growth and traversal.

Trees are stored as flat arrays: ``feature`` (-1 marks a leaf),
``threshold`` (go left when ``x <= threshold``), ``left``, ``right`` and a
per-node ``value`` row.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_GAIN_EPS = 1e-12


@njit(cache=True, nogil=True)
def _argsort_values(vals):
    return np.argsort(vals, kind="mergesort")


@njit(cache=True, nogil=True)
def build_gini_tree(X, y, w, sample_idx, n_classes, max_features, max_depth, seed):
    """Grow a CART classification tree with weighted Gini impurity.

    ``sample_idx`` lists the rows in play (weights ``w`` are indexed by row).
    ``max_depth < 0`` grows until leaves are pure or unsplittable. Split
    search visits features in random order and stops after ``max_features``
    features once a valid split exists; equal gains go to the lower feature
    index. Returns (feature, threshold, left, right, value).
    """
    np.random.seed(seed)
    n = sample_idx.shape[0]
    d = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_classes))

    idx = sample_idx.copy()
    buf = np.empty(n, dtype=np.int64)
    vals = np.empty(n)
    wl = np.zeros(n_classes)
    wr = np.zeros(n_classes)

    # stack entries: node, start, end, depth
    stack = np.empty((cap, 4), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start

        tot = np.zeros(n_classes)
        for i in range(start, end):
            s = idx[i]
            tot[y[s]] += w[s]
        value[node, :] = tot

        n_present = 0
        for c in range(n_classes):
            if tot[c] > 0.0:
                n_present += 1
        if n_present <= 1 or m < 2 or (max_depth >= 0 and depth >= max_depth):
            continue

        w_total = 0.0
        s_total = 0.0
        for c in range(n_classes):
            w_total += tot[c]
            s_total += tot[c] * tot[c]

        best_score = -1.0
        best_f = -1
        best_thr = 0.0
        visited = 0
        order = np.random.permutation(d)
        for oi in range(d):
            if visited >= max_features and best_f >= 0:
                break
            f = order[oi]
            visited += 1
            for i in range(m):
                vals[i] = X[idx[start + i], f]
            srt = _argsort_values(vals[:m])
            if vals[srt[0]] == vals[srt[m - 1]]:
                continue
            for c in range(n_classes):
                wl[c] = 0.0
                wr[c] = tot[c]
            s_l = 0.0
            s_r = s_total
            w_l = 0.0
            w_r = w_total
            for i in range(m - 1):
                s = idx[start + srt[i]]
                c = y[s]
                ww = w[s]
                s_l += 2.0 * wl[c] * ww + ww * ww
                wl[c] += ww
                w_l += ww
                s_r -= 2.0 * wr[c] * ww - ww * ww
                wr[c] -= ww
                w_r -= ww
                v0 = vals[srt[i]]
                v1 = vals[srt[i + 1]]
                if v0 < v1 and w_l > 0.0 and w_r > 0.0:
                    score = s_l / w_l + s_r / w_r
                    tol = _GAIN_EPS * max(1.0, abs(best_score))
                    if best_f < 0 or score > best_score + tol or (
                        abs(score - best_score) <= tol and f < best_f
                    ):
                        best_score = score
                        best_f = f
                        thr = 0.5 * (v0 + v1)
                        if thr >= v1:
                            thr = v0
                        best_thr = thr
        if best_f < 0:
            continue

        # stable partition of idx[start:end]
        nl = 0
        for i in range(start, end):
            if X[idx[i], best_f] <= best_thr:
                buf[nl] = idx[i]
                nl += 1
        nr = nl
        for i in range(start, end):
            if X[idx[i], best_f] > best_thr:
                buf[nr] = idx[i]
                nr += 1
        for i in range(m):
            idx[start + i] = buf[i]

        feature[node] = best_f
        threshold[node] = best_thr
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        stack[top, 0] = rc
        stack[top, 1] = start + nl
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lc
        stack[top, 1] = start
        stack[top, 2] = start + nl
        stack[top, 3] = depth + 1
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True, nogil=True)
def presort_columns(X):
    """Row order of every feature, shape (d, n), stable for equal values."""
    n, d = X.shape
    out = np.empty((d, n), dtype=np.int64)
    for f in range(d):
        out[f] = np.argsort(X[:, f], kind="mergesort")
    return out


@njit(cache=True, nogil=True)
def best_stump(X, order, y, w, n_classes):
    """Weighted-Gini depth-1 split over all features using presorted rows.

    Scoring and tie-breaking match ``build_gini_tree`` with every feature
    visited. Returns (feature, threshold), feature -1 when no split exists.
    """
    n, d = X.shape
    tot = np.zeros(n_classes)
    for s in range(n):
        tot[y[s]] += w[s]
    w_total = 0.0
    s_total = 0.0
    n_present = 0
    for c in range(n_classes):
        w_total += tot[c]
        s_total += tot[c] * tot[c]
        if tot[c] > 0.0:
            n_present += 1
    if n_present <= 1:
        return -1, 0.0
    wl = np.zeros(n_classes)
    wr = np.zeros(n_classes)
    best_score = -1.0
    best_f = -1
    best_thr = 0.0
    for f in range(d):
        o = order[f]
        if X[o[0], f] == X[o[n - 1], f]:
            continue
        for c in range(n_classes):
            wl[c] = 0.0
            wr[c] = tot[c]
        s_l = 0.0
        s_r = s_total
        w_l = 0.0
        w_r = w_total
        for i in range(n - 1):
            s = o[i]
            c = y[s]
            ww = w[s]
            s_l += 2.0 * wl[c] * ww + ww * ww
            wl[c] += ww
            w_l += ww
            s_r -= 2.0 * wr[c] * ww - ww * ww
            wr[c] -= ww
            w_r -= ww
            v0 = X[s, f]
            v1 = X[o[i + 1], f]
            if v0 < v1 and w_l > 0.0 and w_r > 0.0:
                score = s_l / w_l + s_r / w_r
                tol = _GAIN_EPS * max(1.0, abs(best_score))
                if best_f < 0 or score > best_score + tol or (
                    abs(score - best_score) <= tol and f < best_f
                ):
                    best_score = score
                    best_f = f
                    thr = 0.5 * (v0 + v1)
                    if thr >= v1:
                        thr = v0
                    best_thr = thr
    return best_f, best_thr


@njit(cache=True, nogil=True)
def apply_tree(X, feature, threshold, left, right):
    """Leaf index reached by every row of ``X``."""
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True, nogil=True)
def bin_columns(X, cuts, n_cuts):
    """Histogram bin of every entry, feature-major ``(d, n)``.

    The bin is the number of cuts strictly below the value.
    """
    n, d = X.shape
    out = np.empty((d, n), dtype=np.uint8)
    for f in range(d):
        nc = n_cuts[f]
        for i in range(n):
            out[f, i] = np.searchsorted(cuts[f, :nc], X[i, f], side="left")
    return out


@njit(cache=True, nogil=True)
def _build_hist(Xb, g, h, rows, start, end, hist, gbuf, hbuf, sbuf):
    # hist: (d, max_bin, 2) holding gradient and hessian sums per bin
    d = Xb.shape[0]
    m = end - start
    for i in range(m):
        s = rows[start + i]
        sbuf[i] = s
        gbuf[i] = g[s]
        hbuf[i] = h[s]
    for f in range(d):
        hf = hist[f]
        hf[:, :] = 0.0
        col = Xb[f]
        for i in range(m):
            b = col[sbuf[i]]
            hf[b, 0] += gbuf[i]
            hf[b, 1] += hbuf[i]


@njit(cache=True, nogil=True)
def build_root_histograms(Xb, gh, rows, out):
    """Histograms of all classes at once.

    ``gh`` is (n, K, 2) gradient/hessian pairs; ``out`` is (d, max_bin, K, 2).
    """
    d = Xb.shape[0]
    K = gh.shape[1]
    m = rows.shape[0]
    ghr = np.empty((m, K, 2))
    for i in range(m):
        ghr[i] = gh[rows[i]]
    for f in range(d):
        of = out[f]
        of[:, :, :] = 0.0
        col = Xb[f]
        for i in range(m):
            ob = of[col[rows[i]]]
            for k in range(K):
                ob[k, 0] += ghr[i, k, 0]
                ob[k, 1] += ghr[i, k, 1]


@njit(cache=True, nogil=True)
def _copy_root(root_hist, k, out):
    for f in range(out.shape[0]):
        for b in range(out.shape[1]):
            out[f, b, 0] = root_hist[f, b, k, 0]
            out[f, b, 1] = root_hist[f, b, k, 1]


@njit(cache=True, nogil=True)
def _subtract(a, b):
    for f in range(a.shape[0]):
        for i in range(a.shape[1]):
            a[f, i, 0] -= b[f, i, 0]
            a[f, i, 1] -= b[f, i, 1]


def hist_slots(max_depth: int) -> int:
    return 2 * max_depth + 4


@njit(cache=True, nogil=True)
def build_newton_tree(Xb, g, h, rows, n_bins_per_feature, cuts, max_depth, reg_lambda,
                      min_child_weight, colsample, learning_rate, seed, hist, root_hist, root_k):
    """Regression tree on gradient/hessian statistics over histogram bins.

    Split gain is ``GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)``; a split needs
    gain > 1e-6 and both child hessian sums >= ``min_child_weight``; equal
    gains go to the lower feature index. Leaf value is
    ``-learning_rate * G / (H + l)``. ``colsample < 1`` draws a feature
    subset per node. ``hist`` is caller-owned scratch of shape
    ``(hist_slots(max_depth), d, max_bin, 2)``. When ``root_k >= 0`` the
    root histogram is read from ``root_hist[:, :, root_k, :]`` instead of
    being rebuilt.

    Returns tree arrays plus the leaf reached by each entry of ``rows``.
    """
    np.random.seed(seed)
    n = rows.shape[0]
    d = Xb.shape[0]
    cap = 2 ** (max_depth + 1)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, 1))
    node_g = np.zeros(cap)
    node_h = np.zeros(cap)
    node_start = np.zeros(cap, dtype=np.int64)
    node_end = np.zeros(cap, dtype=np.int64)

    n_slots = hist.shape[0]
    free = np.arange(n_slots)[::-1].copy()
    n_free = n_slots

    idx = rows.copy()
    buf = np.empty(n, dtype=np.int64)
    gbuf = np.empty(n)
    hbuf = np.empty(n)
    n_pick = d
    if colsample < 1.0:
        n_pick = max(1, int(colsample * d + 0.5))

    gsum = 0.0
    hsum = 0.0
    for i in range(n):
        gsum += g[idx[i]]
        hsum += h[idx[i]]
    node_g[0] = gsum
    node_h[0] = hsum
    node_end[0] = n
    n_nodes = 1

    # stack entries: node, depth, histogram slot (-1 when not built)
    stack = np.empty((cap, 3), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = -1
    top = 1
    while top > 0:
        top -= 1
        node = stack[top, 0]
        depth = stack[top, 1]
        slot = stack[top, 2]
        G = node_g[node]
        H = node_h[node]
        start = node_start[node]
        end = node_end[node]
        if depth >= max_depth or H < 2.0 * min_child_weight:
            if slot >= 0:
                free[n_free] = slot
                n_free += 1
            continue
        if slot < 0:
            n_free -= 1
            slot = free[n_free]
            if node == 0 and root_k >= 0:
                _copy_root(root_hist, root_k, hist[slot])
            else:
                _build_hist(Xb, g, h, idx, start, end, hist[slot], gbuf, hbuf, buf)
        parent_score = G * G / (H + reg_lambda)

        if n_pick < d:
            feats = np.sort(np.random.permutation(d)[:n_pick])
        else:
            feats = np.arange(d)
        best_gain = 1e-6
        best_f = -1
        best_b = -1
        for fi in range(feats.shape[0]):
            f = feats[fi]
            nb = n_bins_per_feature[f]
            gl = 0.0
            hl = 0.0
            for b in range(nb - 1):
                hb = hist[slot, f, b, 1]
                if hb == 0.0:
                    # empty bin: same partition as the previous cut
                    continue
                gl += hist[slot, f, b, 0]
                hl += hb
                if hl < min_child_weight:
                    continue
                hr = H - hl
                if hr < min_child_weight:
                    break
                gr = G - gl
                gain = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent_score
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_b = b
        if best_f < 0:
            free[n_free] = slot
            n_free += 1
            continue

        col = Xb[best_f]
        nl = 0
        for i in range(start, end):
            if col[idx[i]] <= best_b:
                buf[nl] = idx[i]
                nl += 1
        nr = nl
        for i in range(start, end):
            if col[idx[i]] > best_b:
                buf[nr] = idx[i]
                nr += 1
        for i in range(end - start):
            idx[start + i] = buf[i]

        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = cuts[best_f, best_b]
        left[node] = lc
        right[node] = rc
        node_start[lc] = start
        node_end[lc] = start + nl
        node_start[rc] = start + nl
        node_end[rc] = end
        glc = 0.0
        hlc = 0.0
        for i in range(start, start + nl):
            glc += g[idx[i]]
            hlc += h[idx[i]]
        node_g[lc] = glc
        node_h[lc] = hlc
        node_g[rc] = G - glc
        node_h[rc] = H - hlc

        slot_l = -1
        slot_r = -1
        if depth + 1 < max_depth:
            # histogram subtraction: build the smaller child, derive the larger
            small = lc if nl <= end - start - nl else rc
            n_free -= 1
            s_slot = free[n_free]
            _build_hist(Xb, g, h, idx, node_start[small], node_end[small], hist[s_slot],
                        gbuf, hbuf, buf)
            _subtract(hist[slot], hist[s_slot])
            if small == lc:
                slot_l, slot_r = s_slot, slot
            else:
                slot_l, slot_r = slot, s_slot
        else:
            free[n_free] = slot
            n_free += 1
        stack[top, 0] = rc
        stack[top, 1] = depth + 1
        stack[top, 2] = slot_r
        top += 1
        stack[top, 0] = lc
        stack[top, 1] = depth + 1
        stack[top, 2] = slot_l
        top += 1

    leaf_of_row = np.empty(n, dtype=np.int64)
    pos = np.empty(Xb.shape[1], dtype=np.int64)
    for node in range(n_nodes):
        if feature[node] < 0:
            value[node, 0] = -learning_rate * node_g[node] / (node_h[node] + reg_lambda)
            for i in range(node_start[node], node_end[node]):
                pos[idx[i]] = node
    for i in range(n):
        leaf_of_row[i] = pos[rows[i]]
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), leaf_of_row)
