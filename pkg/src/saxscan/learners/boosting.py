"""Second-order gradient-boosted trees with a softmax objective.

One regression tree per class per round, fitted to the softmax gradient
``p - y`` and diagonal hessian ``2 p (1 - p)`` over quantile histograms.
The random-forest variant is the same trainer run for a single round with
many row/column-subsampled trees whose outputs are averaged.
"""
from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._tree import apply_tree, bin_columns, build_newton_tree, build_root_histograms, hist_slots
from .trees import _as_features, derived_seed

BASE_SCORE = 0.5
_HESS_FLOOR = 1e-16


def softmax(margin: np.ndarray) -> np.ndarray:
    z = margin - margin.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(margin: np.ndarray, y: np.ndarray) -> float:
    z = margin - margin.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(y)), y].mean())


def histogram_cuts(X: np.ndarray, max_bin: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature split candidates.

    Features with at most ``max_bin`` distinct values get every midpoint;
    others get up to ``max_bin - 1`` quantile cuts.
    """
    n, d = X.shape
    cuts = np.zeros((d, max_bin - 1))
    n_cuts = np.zeros(d, dtype=np.int64)
    probs = np.linspace(0.0, 1.0, max_bin + 1)[1:-1]
    for f in range(d):
        u = np.unique(X[:, f])
        if u.size <= max_bin:
            c = 0.5 * (u[1:] + u[:-1])
        else:
            c = np.unique(np.quantile(X[:, f], probs))
            c = c[c < u[-1]]
        cuts[f, : c.size] = c
        n_cuts[f] = c.size
    return cuts, n_cuts


class _Workspace(threading.local):
    def get(self, shape):
        slab = getattr(self, "slab", None)
        if slab is None or slab.shape != shape:
            self.slab = np.zeros(shape)
        return self.slab


class GradientBoostedTrees:
    def __init__(self, n_rounds=100, max_depth=6, learning_rate=0.3, reg_lambda=1.0,
                 min_child_weight=1.0, subsample=1.0, colsample=1.0, n_parallel_trees=1,
                 max_bin=256, seed=0, threads=1):
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.reg_lambda = reg_lambda
        self.min_child_weight = min_child_weight
        self.subsample = subsample
        self.colsample = colsample
        self.n_parallel_trees = n_parallel_trees
        self.max_bin = max_bin
        self.seed = seed
        self.threads = threads

    def _rows(self, n, r, t):
        if self.subsample >= 1.0:
            return np.arange(n, dtype=np.int64)
        rng = np.random.default_rng(derived_seed(self.seed, r, t))
        m = max(1, int(round(self.subsample * n)))
        return np.sort(rng.choice(n, size=m, replace=False)).astype(np.int64)

    def _grow(self, ctx, rows, root, r, k, t, g, h):
        X, Xb, n_bins, cuts = ctx
        ws = self._workspace.get((hist_slots(self.max_depth), X.shape[1], self.max_bin, 2))
        feat, thr, left, right, value, _ = build_newton_tree(
            Xb, g, h, rows, n_bins, cuts, self.max_depth, self.reg_lambda,
            self.min_child_weight, self.colsample, self.learning_rate / self.n_parallel_trees,
            derived_seed(self.seed, r, k, t), ws, root, k)
        return feat, thr, left, right, value[:, 0].copy()

    def fit(self, X, y, n_classes):
        X = _as_features(X)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        self.n_classes = n_classes
        self._workspace = _Workspace()
        cuts, n_cuts = histogram_cuts(X, self.max_bin)
        Xb = bin_columns(X, cuts, n_cuts)
        ctx = (X, Xb, n_cuts + 1, cuts)
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y] = 1.0
        root = np.zeros((d, self.max_bin, n_classes, 2))

        margin = np.full((n, n_classes), BASE_SCORE)
        self.rounds_ = []
        self.train_loss_ = [softmax_cross_entropy(margin, y)]
        pool = ThreadPoolExecutor(self.threads) if self.threads > 1 else None
        try:
            for r in range(self.n_rounds):
                p = softmax(margin)
                gh = np.empty((n, n_classes, 2))
                gh[:, :, 0] = p - onehot
                gh[:, :, 1] = np.maximum(2.0 * p * (1.0 - p), _HESS_FLOOR)
                g = [np.ascontiguousarray(gh[:, k, 0]) for k in range(n_classes)]
                h = [np.ascontiguousarray(gh[:, k, 1]) for k in range(n_classes)]
                per_class = [[] for _ in range(n_classes)]
                for t in range(self.n_parallel_trees):
                    rows = self._rows(n, r, t)
                    build_root_histograms(Xb, gh, rows, root)
                    jobs = [(ctx, rows, root, r, k, t, g[k], h[k]) for k in range(n_classes)]
                    if pool is not None:
                        grown = list(pool.map(lambda a: self._grow(*a), jobs))
                    else:
                        grown = [self._grow(*a) for a in jobs]
                    for k, tree in enumerate(grown):
                        per_class[k].append(tree)
                for k, trees in enumerate(per_class):
                    for feat, thr, left, right, value in trees:
                        margin[:, k] += value[apply_tree(X, feat, thr, left, right)]
                self.rounds_.append(per_class)
                self.train_loss_.append(softmax_cross_entropy(margin, y))
        finally:
            if pool is not None:
                pool.shutdown()
        del self._workspace
        return self

    def decision_function(self, X):
        X = _as_features(X)
        margin = np.full((X.shape[0], self.n_classes), BASE_SCORE)
        for per_class in self.rounds_:
            for k, trees in enumerate(per_class):
                for feat, thr, left, right, value in trees:
                    margin[:, k] += value[apply_tree(X, feat, thr, left, right)]
        return margin

    def predict_proba(self, X):
        return softmax(self.decision_function(X))


def gbt_random_forest(n_trees=100, max_depth=6, subsample=0.8, colsample=0.8,
                      learning_rate=1.0, reg_lambda=1e-5, min_child_weight=1.0,
                      max_bin=256, seed=0, threads=1) -> GradientBoostedTrees:
    """Boosted-tree trainer configured as a random forest: one round, averaged trees."""
    return GradientBoostedTrees(
        n_rounds=1, max_depth=max_depth, learning_rate=learning_rate, reg_lambda=reg_lambda,
        min_child_weight=min_child_weight, subsample=subsample, colsample=colsample,
        n_parallel_trees=n_trees, max_bin=max_bin, seed=seed, threads=threads)
