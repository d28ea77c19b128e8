"""Curve -> feature transforms and principal component analysis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_FLOOR = 1e-12

RAW = "raw"
LOG_NORMALIZED = "log_normalized"
PCA_PROJECTED = "pca_projected"


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    column_means: np.ndarray
    column_stds: np.ndarray
    provenance: str = LOG_NORMALIZED

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _intensity_matrix(curves) -> np.ndarray:
    data = getattr(curves, "intensities", curves)
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if not np.all(np.isfinite(data)):
        bad = np.flatnonzero(~np.all(np.isfinite(data), axis=1))
        raise ValueError(f"non-finite intensities in rows {bad[:10].tolist()}")
    if np.any(data < 0):
        raise ValueError("intensities must be >= 0")
    return data


def log_normalize(intensities: np.ndarray) -> np.ndarray:
    """log10 of each curve divided by its own maximum, floored at 1e-12."""
    peak = intensities.max(axis=1, keepdims=True)
    peak = np.where(peak > 0, peak, 1.0)
    return np.log10(np.maximum(intensities / peak, LOG_FLOOR))


def preprocess(curves, reference: FeatureMatrix | None = None,
               n_points: int | None = None) -> FeatureMatrix:
    """Log-normalize curves and standardize columns.

    Column statistics come from ``reference`` when given (test data), else
    from ``curves`` themselves (fitting set). Constant columns keep unit scale.
    """
    data = _intensity_matrix(curves)
    expected = reference.values.shape[1] if reference is not None else n_points
    if expected is not None and data.shape[1] != expected:
        raise ValueError(f"curves have {data.shape[1]} points, expected {expected}")
    logged = log_normalize(data)
    if reference is None:
        means = logged.mean(axis=0)
        stds = logged.std(axis=0)
        stds = np.where(stds > 0, stds, 1.0)
    else:
        means, stds = reference.column_means, reference.column_stds
    return FeatureMatrix((logged - means) / stds, means, stds, LOG_NORMALIZED)


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray          # k x D, orthonormal rows
    eigenvalues: np.ndarray         # k, descending
    explained_variance_ratio: np.ndarray
    full_variance_ratio: np.ndarray  # all D components, sums to 1
    threshold: float | None

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def _values(X) -> np.ndarray:
    return np.asarray(getattr(X, "values", X), dtype=float)


def pca_fit(X, variance_threshold: float | None = None,
            n_components: int | None = None) -> PcaModel:
    """Fit PCA by SVD of the centered data.

    Keeps the smallest number of components whose cumulative explained
    variance reaches ``variance_threshold``, or exactly ``n_components``.
    """
    values = _values(X)
    n, d = values.shape
    if n < 2:
        raise ValueError("PCA needs at least two rows")
    if (variance_threshold is None) == (n_components is None):
        raise ValueError("give exactly one of variance_threshold or n_components")
    if variance_threshold is not None and not (0.0 < variance_threshold <= 1.0):
        raise ValueError(f"variance threshold must lie in (0, 1], got {variance_threshold}")

    mean = values.mean(axis=0)
    centered = values - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    eig = s**2 / (n - 1)
    total = eig.sum()
    if not total > 0:
        raise ValueError("PCA input has zero total variance")

    # pad to D: directions beyond the rank carry no variance
    full_ratio = np.zeros(d)
    full_ratio[: eig.size] = eig / total

    if n_components is None:
        cum = np.cumsum(full_ratio)
        k = int(np.searchsorted(cum, variance_threshold - 1e-12) + 1)
        k = min(k, eig.size)
    else:
        if not (1 <= n_components <= eig.size):
            raise ValueError(f"n_components must lie in [1, {eig.size}]")
        k = n_components

    comps = vt[:k].copy()
    # sign convention: largest-magnitude entry of each component positive
    lead = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(k), lead])
    comps *= signs[:, None]
    return PcaModel(mean, comps, eig[:k].copy(), full_ratio[:k].copy(), full_ratio,
                    variance_threshold)


def pca_transform(model: PcaModel, X) -> FeatureMatrix:
    values = _values(X)
    if values.ndim != 2 or values.shape[1] != model.mean.size:
        raise ValueError(
            f"PCA model expects {model.mean.size} columns, got {values.shape[-1]}"
        )
    y = (values - model.mean) @ model.components.T
    return FeatureMatrix(y, y.mean(axis=0), y.std(axis=0), PCA_PROJECTED)


def pca_reconstruct(model: PcaModel, Y) -> np.ndarray:
    return _values(Y) @ model.components + model.mean
