"""CART decision trees and random forests (Gini impurity)."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._tree import apply_tree, build_gini_tree


def derived_seed(*key: int) -> int:
    """Deterministic 31-bit seed for a sub-unit (tree, fold, ...)."""
    return int(np.random.SeedSequence([int(k) for k in key]).generate_state(1)[0] >> 1)


class _Tree:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def leaves(self, X: np.ndarray) -> np.ndarray:
        return apply_tree(X, self.feature, self.threshold, self.left, self.right)

    def leaf_values(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.leaves(X)]


def grow_gini_tree(X, y, n_classes, *, weights=None, sample_idx=None, max_features=None,
                   max_depth=None, seed=0) -> _Tree:
    n, d = X.shape
    w = np.ones(n) if weights is None else np.ascontiguousarray(weights, dtype=float)
    idx = np.arange(n, dtype=np.int64) if sample_idx is None else np.asarray(sample_idx, np.int64)
    m = d if max_features is None else int(max_features)
    depth = -1 if max_depth is None else int(max_depth)
    arrays = build_gini_tree(X, y, w, idx, n_classes, m, depth, seed)
    return _Tree(*arrays)


def _as_features(X) -> np.ndarray:
    return np.ascontiguousarray(getattr(X, "values", X), dtype=float)


class DecisionTree:
    """Single CART tree grown to purity; leaf class frequencies as probabilities."""

    def __init__(self, max_depth=None, max_features=None, seed=0, threads=1):
        self.max_depth = max_depth
        self.max_features = max_features
        self.seed = seed

    def fit(self, X, y, n_classes):
        X = _as_features(X)
        self.n_classes = n_classes
        self.tree_ = grow_gini_tree(X, y, n_classes, max_features=self.max_features,
                                    max_depth=self.max_depth, seed=derived_seed(self.seed))
        return self

    def predict_proba(self, X):
        counts = self.tree_.leaf_values(_as_features(X))
        return counts / counts.sum(axis=1, keepdims=True)


class RandomForest:
    """Bootstrap-aggregated CART trees with ``ceil(sqrt(D))`` features per split.

    Each tree casts one vote (its leaf majority, lowest class index on ties);
    probabilities are vote fractions.
    """

    def __init__(self, n_estimators=100, max_features="sqrt", bootstrap=True,
                 max_depth=None, seed=0, threads=1):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.max_depth = max_depth
        self.seed = seed
        self.threads = threads

    def _n_features(self, d: int) -> int:
        if self.max_features == "sqrt":
            return math.ceil(math.sqrt(d))
        if self.max_features is None:
            return d
        return int(self.max_features)

    def _grow(self, X, y, t):
        n = X.shape[0]
        seed = derived_seed(self.seed, t)
        if self.bootstrap:
            rng = np.random.default_rng(seed)
            w = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
            idx = np.flatnonzero(w)
        else:
            w, idx = None, None
        return grow_gini_tree(X, y, self.n_classes, weights=w, sample_idx=idx,
                              max_features=self._n_features(X.shape[1]),
                              max_depth=self.max_depth, seed=seed)

    def fit(self, X, y, n_classes):
        X = _as_features(X)
        self.n_classes = n_classes
        if self.threads > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                self.trees_ = list(pool.map(lambda t: self._grow(X, y, t),
                                            range(self.n_estimators)))
        else:
            self.trees_ = [self._grow(X, y, t) for t in range(self.n_estimators)]
        return self

    def tree_votes(self, X) -> np.ndarray:
        """Class voted by each tree, shape (n_estimators, n_samples)."""
        X = _as_features(X)
        return np.stack([np.argmax(t.leaf_values(X), axis=1) for t in self.trees_])

    def predict_proba(self, X):
        votes = self.tree_votes(X)
        n = votes.shape[1]
        proba = np.zeros((n, self.n_classes))
        for v in votes:
            proba[np.arange(n), v] += 1.0
        return proba / len(self.trees_)
