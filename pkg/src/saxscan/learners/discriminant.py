"""Gaussian generative classifiers: naive Bayes and quadratic discriminant."""
from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import logsumexp

from .trees import _as_features


def _class_stats(X, y, n_classes):
    counts = np.bincount(y, minlength=n_classes).astype(float)
    means = np.zeros((n_classes, X.shape[1]))
    for k in range(n_classes):
        means[k] = X[y == k].mean(axis=0)
    return counts, means


def _posterior(joint: np.ndarray) -> np.ndarray:
    return np.exp(joint - logsumexp(joint, axis=1, keepdims=True))


class GaussianNB:
    """Per-class independent Gaussians; variances smoothed by
    ``var_smoothing`` times the largest feature variance."""

    def __init__(self, var_smoothing=1e-9, seed=0, threads=1):
        self.var_smoothing = var_smoothing

    def fit(self, X, y, n_classes):
        X = _as_features(X)
        y = np.asarray(y, dtype=np.int64)
        self.n_classes = n_classes
        counts, self.means_ = _class_stats(X, y, n_classes)
        self.epsilon_ = self.var_smoothing * X.var(axis=0).max()
        self.vars_ = np.zeros_like(self.means_)
        for k in range(n_classes):
            self.vars_[k] = X[y == k].var(axis=0) + self.epsilon_
        self.log_prior_ = np.log(counts / counts.sum())
        return self

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = _as_features(X)
        out = np.empty((X.shape[0], self.n_classes))
        for k in range(self.n_classes):
            v = self.vars_[k]
            out[:, k] = (self.log_prior_[k] - 0.5 * np.sum(np.log(2.0 * np.pi * v))
                         - 0.5 * np.sum((X - self.means_[k]) ** 2 / v, axis=1))
        return out

    def predict_proba(self, X):
        return _posterior(self.joint_log_likelihood(X))


class QDA:
    """Per-class mean and full covariance with a trace-scaled ridge.

    Each covariance gets ``ridge * trace(S) / D`` added to its diagonal
    before factorization. ``diagonal=True`` keeps only the variances.
    """

    def __init__(self, ridge=1e-6, diagonal=False, seed=0, threads=1):
        self.ridge = ridge
        self.diagonal = diagonal

    def fit(self, X, y, n_classes):
        X = _as_features(X)
        y = np.asarray(y, dtype=np.int64)
        counts, means = _class_stats(X, y, n_classes)
        covs = []
        for k in range(n_classes):
            Z = X[y == k] - means[k]
            S = Z.T @ Z / Z.shape[0]
            if self.diagonal:
                S = np.diag(np.diag(S))
            S = S + np.eye(S.shape[0]) * (self.ridge * np.trace(S) / S.shape[0])
            covs.append(S)
        return self.set_moments(means, np.array(covs), counts / counts.sum())

    def set_moments(self, means, covariances, priors):
        """Install class moments directly (means K x D, covariances K x D x D)."""
        self.n_classes = len(priors)
        self.means_ = np.asarray(means, dtype=float)
        self.log_prior_ = np.log(np.asarray(priors, dtype=float))
        self.factors_ = []
        self.log_dets_ = np.zeros(self.n_classes)
        for k, S in enumerate(covariances):
            try:
                c = cho_factor(S, lower=True)
            except np.linalg.LinAlgError as exc:
                raise np.linalg.LinAlgError(f"class {k} covariance is not positive definite") from exc
            self.factors_.append(c)
            self.log_dets_[k] = 2.0 * np.sum(np.log(np.diag(c[0])))
        return self

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = _as_features(X)
        D = X.shape[1]
        out = np.empty((X.shape[0], self.n_classes))
        for k in range(self.n_classes):
            Z = X - self.means_[k]
            maha = np.einsum("ij,ji->i", Z, cho_solve(self.factors_[k], Z.T))
            out[:, k] = (self.log_prior_[k] - 0.5 * (self.log_dets_[k] + D * np.log(2.0 * np.pi))
                         - 0.5 * maha)
        return out

    def predict_proba(self, X):
        return _posterior(self.joint_log_likelihood(X))
