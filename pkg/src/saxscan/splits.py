"""Stratified k-fold index splitting."""
from __future__ import annotations

import numpy as np


class FoldError(ValueError):
    pass


def kfold_split(n: int, k: int, labels, seed: int) -> list[np.ndarray]:
    """Partition ``range(n)`` into ``k`` stratified folds.

    Each class is shuffled and dealt round-robin, continuing where the
    previous class stopped, so per-class and total fold sizes differ by at
    most one. Folds are returned as sorted index arrays.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise FoldError(f"need at least 2 folds, got {k}")
    if labels.shape != (n,):
        raise FoldError(f"expected {n} labels, got shape {labels.shape}")
    if n < k:
        raise FoldError(f"cannot split {n} samples into {k} folds")
    classes, counts = np.unique(labels, return_counts=True)
    short = classes[counts < k]
    if short.size:
        raise FoldError(f"classes {short.tolist()} have fewer than {k} samples")

    rng = np.random.default_rng(seed)
    assign = np.empty(n, dtype=np.int64)
    offset = 0
    for c in classes:
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        assign[idx] = (np.arange(idx.size) + offset) % k
        offset = (offset + idx.size) % k
    return [np.flatnonzero(assign == f) for f in range(k)]
