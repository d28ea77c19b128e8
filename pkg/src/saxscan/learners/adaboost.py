"""Multi-class AdaBoost (SAMME) over depth-1 Gini stumps."""
from __future__ import annotations

import numpy as np

from ._tree import best_stump, presort_columns
from .boosting import softmax
from .trees import _Tree, _as_features


def fit_stump(X, order, y, w, n_classes) -> _Tree:
    """Depth-1 weighted Gini tree; leaves hold per-class weight sums."""
    f, thr = best_stump(X, order, y, w, n_classes)
    if f < 0:
        value = np.bincount(y, weights=w, minlength=n_classes)[None, :]
        return _Tree(np.array([-1]), np.zeros(1), np.array([-1]), np.array([-1]), value)
    go_left = X[:, f] <= thr
    lv = np.bincount(y[go_left], weights=w[go_left], minlength=n_classes)
    rv = np.bincount(y[~go_left], weights=w[~go_left], minlength=n_classes)
    value = np.stack([lv + rv, lv, rv])
    return _Tree(np.array([f, -1, -1]), np.array([thr, 0.0, 0.0]), np.array([1, -1, -1]),
                 np.array([2, -1, -1]), value)


class AdaBoost:
    def __init__(self, n_estimators=50, learning_rate=1.0, seed=0, threads=1):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X, y, n_classes):
        X = _as_features(X)
        y = np.asarray(y, dtype=np.int64)
        n = len(y)
        K = n_classes
        self.n_classes = K
        self.prior_ = np.bincount(y, minlength=K) / n
        w = np.full(n, 1.0 / n)
        order = presort_columns(X)
        self.stumps_ = []
        self.alphas_ = []
        self.errors_ = []
        for _ in range(self.n_estimators):
            stump = fit_stump(X, order, y, w, K)
            pred = np.argmax(stump.leaf_values(X), axis=1)
            miss = pred != y
            err = float(np.sum(w[miss]) / np.sum(w))
            # no better than chance (with slack for rounding in the weight sum)
            if err >= 1.0 - 1.0 / K - 1e-12:
                break
            if err <= 0.0:
                # a perfect stump: keep it with unit weight and stop
                self.stumps_.append(stump)
                self.alphas_.append(1.0)
                self.errors_.append(err)
                break
            alpha = self.learning_rate * (np.log((1.0 - err) / err) + np.log(K - 1.0))
            self.stumps_.append(stump)
            self.alphas_.append(float(alpha))
            self.errors_.append(err)
            w = w * np.exp(alpha * miss)
            w /= w.sum()
        self.alphas_ = np.array(self.alphas_)
        return self

    def decision_function(self, X) -> np.ndarray:
        X = _as_features(X)
        out = np.zeros((X.shape[0], self.n_classes))
        rows = np.arange(X.shape[0])
        for stump, alpha in zip(self.stumps_, self.alphas_):
            out[rows, np.argmax(stump.leaf_values(X), axis=1)] += alpha
        return out / self.alphas_.sum()

    def predict_proba(self, X):
        if not self.stumps_:
            return np.tile(self.prior_, (_as_features(X).shape[0], 1))
        return softmax(self.decision_function(X) / (self.n_classes - 1))
