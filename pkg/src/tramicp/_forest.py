"""Compiled regression forest (CART trees on bootstrap samples).

Trees split on axis-aligned thresholds that maximize the reduction in
squared error, trying ``mtry`` non-constant features per node; every leaf
keeps at least ``min_leaf`` bootstrap samples (counting duplicates). Trees are stored in flat
arrays (one row per tree) so fitting and prediction run in one compiled call.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _build_tree(X, y, wt, gorder, min_leaf, mtry, feat, thr, left, right, value):
    """Grow one tree on rows weighted by bootstrap counts ``wt``.

    ``gorder[f]`` lists all rows sorted by feature ``f``; each node is a
    contiguous segment of the filtered lists, kept sorted by stable
    partitioning, so no sorting happens below the root.
    """
    n, d = X.shape
    u = 0
    for i in range(n):
        if wt[i] > 0:
            u += 1
    lists = np.empty((d, u), np.int64)
    for f in range(d):
        k = 0
        for i in range(n):
            r = gorder[f, i]
            if wt[r] > 0:
                lists[f, k] = r
                k += 1
    buf = np.empty(u, np.int64)
    goes_left = np.zeros(n, np.bool_)
    cap = feat.shape[0]
    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_node[0], stack_lo[0], stack_hi[0] = 0, 0, u
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node, lo, hi = stack_node[top], stack_lo[top], stack_hi[top]
        tot_w = 0.0
        tot = 0.0
        tot2 = 0.0
        for k in range(lo, hi):
            r = lists[0, k]
            tot_w += wt[r]
            tot += wt[r] * y[r]
            tot2 += wt[r] * y[r] * y[r]
        mean = tot / tot_w
        value[node] = mean
        feat[node] = -1
        if tot_w < 2 * min_leaf or tot2 / tot_w - mean * mean <= 1e-14 * (1.0 + mean * mean):
            continue
        best = tot * tot / tot_w * (1.0 + 1e-12)
        best_f = -1
        best_k = -1
        perm = np.random.permutation(d)
        tried = 0
        for pf in range(d):
            if tried >= mtry:
                break
            f = perm[pf]
            if X[lists[f, lo], f] == X[lists[f, hi - 1], f]:
                continue
            tried += 1
            w_left = 0.0
            s_left = 0.0
            for k in range(lo, hi - 1):
                r = lists[f, k]
                w_left += wt[r]
                s_left += wt[r] * y[r]
                if w_left < min_leaf:
                    continue
                w_right = tot_w - w_left
                if w_right < min_leaf:
                    break
                if X[r, f] == X[lists[f, k + 1], f]:
                    continue
                s_right = tot - s_left
                score = s_left * s_left / w_left + s_right * s_right / w_right
                if score > best:
                    best = score
                    best_f = f
                    best_k = k
        if best_f < 0:
            continue
        a = X[lists[best_f, best_k], best_f]
        b = X[lists[best_f, best_k + 1], best_f]
        t = 0.5 * (a + b)
        if t >= b:
            t = a
        for k in range(lo, hi):
            r = lists[best_f, k]
            goes_left[r] = X[r, best_f] <= t
        mid = lo
        for f in range(d):
            nl = 0
            nr = 0
            for k in range(lo, hi):
                r = lists[f, k]
                if goes_left[r]:
                    lists[f, lo + nl] = r
                    nl += 1
                else:
                    buf[nr] = r
                    nr += 1
            for k in range(nr):
                lists[f, lo + nl + k] = buf[k]
            mid = lo + nl
        feat[node] = best_f
        thr[node] = t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node[top], stack_lo[top], stack_hi[top] = n_nodes, lo, mid
        top += 1
        stack_node[top], stack_lo[top], stack_hi[top] = n_nodes + 1, mid, hi
        top += 1
        n_nodes += 2
    return n_nodes


@njit(cache=True)
def _tree_predict(x, feat, thr, left, right, value):
    node = 0
    while feat[node] >= 0:
        if x[feat[node]] <= thr[node]:
            node = left[node]
        else:
            node = right[node]
    return value[node]


@njit(cache=True)
def fit_forest(X, y, boot, seeds, min_leaf, mtry):
    """Grow one tree per row of ``boot`` (bootstrap row indices).

    Returns the flat tree arrays and out-of-bag predictions (NaN for rows
    that were in every bootstrap sample).
    """
    n_trees = boot.shape[0]
    n, d = X.shape
    max_nodes = 2 * (boot.shape[1] // max(min_leaf, 1)) + 3
    feat = np.full((n_trees, max_nodes), -1, np.int64)
    thr = np.zeros((n_trees, max_nodes))
    left = np.zeros((n_trees, max_nodes), np.int64)
    right = np.zeros((n_trees, max_nodes), np.int64)
    value = np.zeros((n_trees, max_nodes))
    gorder = np.empty((d, n), np.int64)
    for f in range(d):
        gorder[f] = np.argsort(X[:, f], kind="mergesort")
    oob_sum = np.zeros(n)
    oob_cnt = np.zeros(n)
    wt = np.zeros(n)
    for t in range(n_trees):
        np.random.seed(seeds[t])
        wt[:] = 0.0
        for i in range(boot.shape[1]):
            wt[boot[t, i]] += 1.0
        _build_tree(X, y, wt, gorder, min_leaf, mtry, feat[t], thr[t], left[t], right[t], value[t])
        for i in range(n):
            if wt[i] == 0.0:
                oob_sum[i] += _tree_predict(X[i], feat[t], thr[t], left[t], right[t], value[t])
                oob_cnt[i] += 1.0
    oob = np.full(n, np.nan)
    for i in range(n):
        if oob_cnt[i] > 0:
            oob[i] = oob_sum[i] / oob_cnt[i]
    return feat, thr, left, right, value, oob


@njit(cache=True)
def predict_forest(X, feat, thr, left, right, value):
    n = X.shape[0]
    n_trees = feat.shape[0]
    out = np.zeros(n)
    for i in range(n):
        s = 0.0
        for t in range(n_trees):
            s += _tree_predict(X[i], feat[t], thr[t], left[t], right[t], value[t])
        out[i] = s / n_trees
    return out


class RegressionForest:
    """Bagged CART regression trees with out-of-bag fitted values.

    Parameters
    ----------
    n_trees : int
    min_leaf : int
        Minimum number of (bootstrap) samples per leaf.
    mtry : int
        Non-constant features tried at each split.
    seed : int or numpy SeedSequence
    """

    def __init__(self, n_trees=100, min_leaf=5, mtry=1, seed=0):
        if n_trees < 1 or min_leaf < 1 or mtry < 1:
            raise ValueError("n_trees, min_leaf and mtry must be positive")
        self.n_trees = int(n_trees)
        self.min_leaf = int(min_leaf)
        self.mtry = int(mtry)
        self.seed = seed

    def fit(self, X, y):
        X = np.ascontiguousarray(X, dtype=float)
        y = np.ascontiguousarray(y, dtype=float)
        n = X.shape[0]
        rng = np.random.default_rng(self.seed)
        boot = rng.integers(0, n, size=(self.n_trees, n))
        seeds = rng.integers(0, 2**31 - 1, size=self.n_trees)
        out = fit_forest(X, y, boot, seeds, self.min_leaf, self.mtry)
        self.trees_ = out[:5]
        self.n_features_ = X.shape[1]
        self._X = X
        oob = out[5]
        missing = np.isnan(oob)
        if missing.any():
            oob[missing] = predict_forest(X[missing], *self.trees_)
        self.oob_prediction_ = oob
        return self

    @property
    def inbag_prediction_(self):
        """Predictions of all trees for the training rows."""
        return predict_forest(self._X, *self.trees_)

    def predict(self, X):
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features")
        return predict_forest(X, *self.trees_)
