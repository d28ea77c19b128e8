"""k-nearest-neighbor voting with brute-force Euclidean search."""
from __future__ import annotations

import numpy as np

from .trees import _as_features

_CHUNK = 512


def squared_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances, clipped at zero."""
    aa = np.einsum("ij,ij->i", A, A)[:, None]
    bb = np.einsum("ij,ij->i", B, B)[None, :]
    return np.maximum(aa + bb - 2.0 * (A @ B.T), 0.0)


class KNeighbors:
    """Uniform vote among the ``k`` nearest training points.

    Distance ties go to the lower training index.
    """

    def __init__(self, k=5, seed=0, threads=1):
        self.k = k

    def fit(self, X, y, n_classes):
        self.X_ = _as_features(X).copy()
        self.y_ = np.asarray(y, dtype=np.int64).copy()
        self.n_classes = n_classes
        if not 1 <= self.k <= len(self.y_):
            raise ValueError(f"k={self.k} must lie in [1, {len(self.y_)}]")
        return self

    def kneighbors(self, X) -> np.ndarray:
        X = _as_features(X)
        out = np.empty((X.shape[0], self.k), dtype=np.int64)
        for s in range(0, X.shape[0], _CHUNK):
            d2 = squared_distances(X[s:s + _CHUNK], self.X_)
            out[s:s + _CHUNK] = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return out

    def predict_proba(self, X):
        nb = self.kneighbors(X)
        votes = self.y_[nb]
        proba = np.zeros((nb.shape[0], self.n_classes))
        rows = np.repeat(np.arange(nb.shape[0]), self.k)
        np.add.at(proba, (rows, votes.ravel()), 1.0)
        return proba / self.k
