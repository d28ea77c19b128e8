"""One-hidden-layer ReLU network with softmax output, trained by Adam."""
from __future__ import annotations

import numpy as np

from .boosting import softmax
from .trees import _as_features, derived_seed


def init_params(n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator):
    """Glorot-uniform weights, uniform biases in the same range."""
    params = []
    for a, b in ((n_in, n_hidden), (n_hidden, n_out)):
        bound = np.sqrt(6.0 / (a + b))
        params.append(rng.uniform(-bound, bound, (a, b)))
        params.append(rng.uniform(-bound, bound, b))
    return params


def loss_and_grad(params, X, Y, alpha):
    """Mean cross-entropy plus ``alpha / (2 n) * sum(W**2)``, with gradients.

    ``Y`` is one-hot (n x K). Returns ``(loss, [dW1, db1, dW2, db2])``.
    """
    W1, b1, W2, b2 = params
    n = X.shape[0]
    Z = X @ W1 + b1
    A = np.maximum(Z, 0.0)
    logits = A @ W2 + b2
    m = logits.max(axis=1, keepdims=True)
    logp = logits - m - np.log(np.exp(logits - m).sum(axis=1, keepdims=True))
    loss = -np.sum(Y * logp) / n + 0.5 * alpha * (np.sum(W1 * W1) + np.sum(W2 * W2)) / n

    delta = (np.exp(logp) - Y) / n
    dW2 = A.T @ delta + alpha * W2 / n
    db2 = delta.sum(axis=0)
    dA = delta @ W2.T
    dA[Z <= 0.0] = 0.0
    dW1 = X.T @ dA + alpha * W1 / n
    db1 = dA.sum(axis=0)
    return loss, [dW1, db1, dW2, db2]


class MLP:
    """Mini-batch Adam on softmax cross-entropy.

    Stops when the epoch loss fails to improve on the best loss by ``tol``
    for ``n_iter_no_change`` consecutive epochs, or after ``max_epochs``.
    """

    def __init__(self, hidden=100, max_epochs=200, batch_size=200, learning_rate=1e-3,
                 alpha=1e-4, tol=1e-4, n_iter_no_change=10, beta1=0.9, beta2=0.999,
                 epsilon=1e-8, seed=0, threads=1):
        self.hidden = hidden
        self.max_epochs = max_epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.alpha = alpha
        self.tol = tol
        self.n_iter_no_change = n_iter_no_change
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.seed = seed

    def fit(self, X, y, n_classes):
        X = _as_features(X)
        y = np.asarray(y, dtype=np.int64)
        n = X.shape[0]
        self.n_classes = n_classes
        rng = np.random.default_rng(derived_seed(self.seed))
        params = init_params(X.shape[1], self.hidden, n_classes, rng)
        Y = np.zeros((n, n_classes))
        Y[np.arange(n), y] = 1.0
        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        step = 0
        batch = min(self.batch_size, n)
        best = np.inf
        stale = 0
        self.loss_curve_ = []
        for _ in range(self.max_epochs):
            order = rng.permutation(n)
            total = 0.0
            for s in range(0, n, batch):
                idx = order[s:s + batch]
                loss, grads = loss_and_grad(params, X[idx], Y[idx], self.alpha)
                total += loss * idx.size
                step += 1
                lr = (self.learning_rate * np.sqrt(1.0 - self.beta2**step)
                      / (1.0 - self.beta1**step))
                for p, g, mi, vi in zip(params, grads, m, v):
                    mi *= self.beta1
                    mi += (1.0 - self.beta1) * g
                    vi *= self.beta2
                    vi += (1.0 - self.beta2) * g * g
                    p -= lr * mi / (np.sqrt(vi) + self.epsilon)
            epoch_loss = total / n
            self.loss_curve_.append(epoch_loss)
            if epoch_loss > best - self.tol:
                stale += 1
            else:
                stale = 0
            best = min(best, epoch_loss)
            if stale >= self.n_iter_no_change:
                break
        self.params_ = params
        self.n_epochs_ = len(self.loss_curve_)
        return self

    def predict_proba(self, X):
        W1, b1, W2, b2 = self.params_
        A = np.maximum(_as_features(X) @ W1 + b1, 0.0)
        return softmax(A @ W2 + b2)
