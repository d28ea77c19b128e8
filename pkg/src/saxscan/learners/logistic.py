"""Multinomial logistic regression with an L2 penalty, fitted by L-BFGS."""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from .boosting import softmax
from .trees import _as_features


def objective(theta, X, Y, C):
    """``C * sum(cross-entropy) + 0.5 * |W|^2`` and its gradient.

    ``theta`` packs the (D+1) x K coefficient matrix row-major with the
    unpenalized intercept in the last row.
    """
    D = X.shape[1]
    K = Y.shape[1]
    T = theta.reshape(D + 1, K)
    W, b = T[:D], T[D]
    logits = X @ W + b
    m = logits.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    loss = C * (np.sum(lse) - np.sum(Y * logits)) + 0.5 * np.sum(W * W)
    R = C * (softmax(logits) - Y)
    grad = np.empty_like(T)
    grad[:D] = X.T @ R + W
    grad[D] = R.sum(axis=0)
    return loss, grad.ravel()


class LogisticRegression:
    def __init__(self, C=1.0, tol=1e-6, max_iter=1000, seed=0, threads=1):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y, n_classes):
        X = _as_features(X)
        y = np.asarray(y, dtype=np.int64)
        n, D = X.shape
        self.n_classes = n_classes
        Y = np.zeros((n, n_classes))
        Y[np.arange(n), y] = 1.0
        res = minimize(objective, np.zeros((D + 1) * n_classes), args=(X, Y, self.C),
                       jac=True, method="L-BFGS-B",
                       options={"maxiter": self.max_iter, "gtol": self.tol, "ftol": 1e-15,
                                "maxcor": 30})
        T = res.x.reshape(D + 1, n_classes)
        self.coef_ = T[:D].copy()
        self.intercept_ = T[D].copy()
        self.n_iter_ = int(res.nit)
        self.converged_ = bool(res.success)
        return self

    def decision_function(self, X):
        return _as_features(X) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        return softmax(self.decision_function(X))
