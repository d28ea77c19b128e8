"""Common train / predict contract over all classifier families."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

from ..splits import FoldError, kfold_split
from .adaboost import AdaBoost
from .boosting import GradientBoostedTrees, gbt_random_forest
from .discriminant import QDA, GaussianNB
from .logistic import LogisticRegression
from .mlp import MLP
from .neighbors import KNeighbors
from .trees import DecisionTree, RandomForest


class LearnerError(ValueError):
    pass


class DegenerateLabelError(LearnerError):
    pass


class NonFiniteFeatureError(LearnerError):
    pass


class DimensionMismatchError(LearnerError):
    pass


def _pos_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v >= 1


def _pos(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0


def _nonneg(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0


def _fraction(v):
    return isinstance(v, (int, float)) and 0 < v <= 1


def _depth(v):
    return v is None or _pos_int(v)


def _max_bin(v):
    return _pos_int(v) and 2 <= v <= 256


def _max_features(v):
    return v is None or v == "sqrt" or _pos_int(v)


# algorithm -> (factory, defaults, validators)
_TREE = {"max_depth": (None, _depth), "max_features": (None, _max_features)}
_REGISTRY: dict[str, tuple[Any, dict[str, tuple[Any, Any]]]] = {
    "decision_tree": (DecisionTree, _TREE),
    "random_forest": (RandomForest, {
        "n_estimators": (100, _pos_int),
        "max_features": ("sqrt", _max_features),
        "max_depth": (None, _depth),
    }),
    "gradient_boosted_trees": (GradientBoostedTrees, {
        "n_rounds": (100, _pos_int),
        "max_depth": (6, _pos_int),
        "learning_rate": (0.3, _pos),
        "reg_lambda": (1.0, _nonneg),
        "min_child_weight": (1.0, _nonneg),
        "subsample": (1.0, _fraction),
        "colsample": (1.0, _fraction),
        "max_bin": (256, _max_bin),
    }),
    "gbt_random_forest": (gbt_random_forest, {
        "n_trees": (100, _pos_int),
        "max_depth": (6, _pos_int),
        "subsample": (0.8, _fraction),
        "colsample": (0.8, _fraction),
        "learning_rate": (1.0, _pos),
        "reg_lambda": (1e-5, _nonneg),
        "min_child_weight": (1.0, _nonneg),
        "max_bin": (256, _max_bin),
    }),
    "knn": (KNeighbors, {"k": (5, _pos_int)}),
    "gaussian_nb": (GaussianNB, {"var_smoothing": (1e-9, _nonneg)}),
    "adaboost": (AdaBoost, {
        "n_estimators": (50, _pos_int),
        "learning_rate": (1.0, _pos),
    }),
    "qda": (QDA, {"ridge": (1e-6, _pos), "diagonal": (False, lambda v: isinstance(v, bool))}),
    "mlp": (MLP, {
        "hidden": (100, _pos_int),
        "max_epochs": (200, _pos_int),
        "batch_size": (200, _pos_int),
        "learning_rate": (1e-3, _pos),
        "alpha": (1e-4, _nonneg),
        "tol": (1e-4, _nonneg),
        "n_iter_no_change": (10, _pos_int),
    }),
    "logistic_regression": (LogisticRegression, {
        "C": (1.0, _pos),
        "tol": (1e-6, _pos),
        "max_iter": (1000, _pos_int),
    }),
}

ALGORITHMS = tuple(_REGISTRY)
# the individually evaluated suite (logistic regression serves as the stacking meta learner)
BASE_SUITE = ("random_forest", "gradient_boosted_trees", "gbt_random_forest", "mlp",
              "decision_tree", "adaboost", "gaussian_nb", "qda", "knn")


def default_params(algorithm: str) -> dict[str, Any]:
    if algorithm not in _REGISTRY:
        raise LearnerError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    return {k: v[0] for k, v in _REGISTRY[algorithm][1].items()}


@dataclass(frozen=True)
class ClassifierSpec:
    algorithm: str
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        merged = default_params(self.algorithm)
        table = _REGISTRY[self.algorithm][1]
        for key, value in dict(self.params).items():
            if key not in table:
                raise LearnerError(f"{self.algorithm}: unknown hyperparameter {key!r}")
            if not table[key][1](value):
                raise LearnerError(f"{self.algorithm}: invalid value {value!r} for {key}")
            merged[key] = value
        object.__setattr__(self, "params", MappingProxyType(merged))

    def __reduce__(self):
        # mapping proxies do not pickle; rebuild from a plain dict
        return (ClassifierSpec, (self.algorithm, dict(self.params), self.seed))

    @property
    def name(self) -> str:
        return self.algorithm

    def to_dict(self) -> dict[str, Any]:
        return {"algorithm": self.algorithm, "params": dict(self.params), "seed": self.seed}


@dataclass(frozen=True)
class StackSpec:
    base_specs: tuple[ClassifierSpec, ...]
    meta: ClassifierSpec = field(default_factory=lambda: ClassifierSpec("logistic_regression"))
    folds: int = 5
    mode: str = "StackedAll"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "base_specs", tuple(self.base_specs))
        if not self.base_specs:
            raise LearnerError("a stack needs at least one base classifier")
        if self.folds < 2:
            raise LearnerError("a stack needs at least two folds")
        if self.meta.algorithm != "logistic_regression":
            raise LearnerError("the stacking meta learner is logistic regression")

    @property
    def name(self) -> str:
        return self.mode

    def to_dict(self) -> dict[str, Any]:
        return {"mode": self.mode, "folds": self.folds, "seed": self.seed,
                "meta": self.meta.to_dict(), "base_specs": [s.to_dict() for s in self.base_specs]}


@dataclass(frozen=True)
class FittedClassifier:
    spec: ClassifierSpec | StackSpec
    model: Any
    classes: np.ndarray
    train_time: float
    n_samples: int
    n_features: int

    def predict_proba(self, X) -> np.ndarray:
        X = _check_features(X)
        if X.shape[1] != self.n_features:
            raise DimensionMismatchError(
                f"model was trained on {self.n_features} features, got {X.shape[1]}")
        return self.model.predict_proba(X)

    def predict(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.predict_proba(X), axis=1)]


class StackedModel:
    def __init__(self, bases: list[FittedClassifier], meta: FittedClassifier):
        self.bases = bases
        self.meta = meta

    def meta_features(self, X) -> np.ndarray:
        return np.hstack([b.predict_proba(X) for b in self.bases])

    def predict_proba(self, X):
        return self.meta.predict_proba(self.meta_features(X))


def _check_features(X) -> np.ndarray:
    X = np.ascontiguousarray(getattr(X, "values", X), dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError(f"features must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        rows = np.flatnonzero(~np.all(np.isfinite(X), axis=1))
        raise NonFiniteFeatureError(f"non-finite features in rows {rows[:10].tolist()}")
    return X


def _check_training(X, y):
    X = _check_features(X)
    y = np.asarray(y)
    if y.shape != (X.shape[0],):
        raise LearnerError(f"{X.shape[0]} feature rows but labels of shape {y.shape}")
    classes, codes = np.unique(y, return_inverse=True)
    if classes.size < 2:
        raise DegenerateLabelError("training labels contain a single class")
    return X, classes, codes.astype(np.int64)


def _fit_single(spec: ClassifierSpec, X, codes, n_classes, threads):
    factory = _REGISTRY[spec.algorithm][0]
    est = factory(**dict(spec.params), seed=spec.seed, threads=threads)
    return est.fit(X, codes, n_classes)


def train(spec: ClassifierSpec, X, y, threads: int = 1) -> FittedClassifier:
    """Fit ``spec`` on features ``X`` (N x D) and labels ``y``."""
    if isinstance(spec, StackSpec):
        return train_stacked(spec, X, y, threads=threads)
    X, classes, codes = _check_training(X, y)
    t0 = time.perf_counter()
    model = _fit_single(spec, X, codes, classes.size, threads)
    elapsed = time.perf_counter() - t0
    return FittedClassifier(spec, model, classes, elapsed, X.shape[0], X.shape[1])


def out_of_fold_probabilities(spec: ClassifierSpec, X, codes, n_classes, folds, threads=1):
    """Held-out class probabilities for every row, one model per fold."""
    out = np.zeros((X.shape[0], n_classes))
    for test in folds:
        fit_rows = np.setdiff1d(np.arange(X.shape[0]), test)
        model = _fit_single(spec, X[fit_rows], codes[fit_rows], n_classes, threads)
        out[test] = model.predict_proba(X[test])
    return out


def train_stacked(spec: StackSpec, X, y, threads: int = 1) -> FittedClassifier:
    """Base models on all rows; logistic meta model on out-of-fold probabilities."""
    X, classes, codes = _check_training(X, y)
    K = classes.size
    t0 = time.perf_counter()
    try:
        folds = kfold_split(X.shape[0], spec.folds, codes, spec.seed)
    except FoldError as exc:
        raise FoldError(f"cannot build stacking folds: {exc}") from exc
    meta_X = np.hstack([out_of_fold_probabilities(b, X, codes, K, folds, threads)
                        for b in spec.base_specs])
    bases = []
    for b in spec.base_specs:
        t1 = time.perf_counter()
        model = _fit_single(b, X, codes, K, threads)
        bases.append(FittedClassifier(b, model, classes, time.perf_counter() - t1,
                                      X.shape[0], X.shape[1]))
    t1 = time.perf_counter()
    meta_model = _fit_single(spec.meta, meta_X, codes, K, threads)
    meta = FittedClassifier(spec.meta, meta_model, np.arange(K), time.perf_counter() - t1,
                            meta_X.shape[0], meta_X.shape[1])
    elapsed = time.perf_counter() - t0
    return FittedClassifier(spec, StackedModel(bases, meta), classes, elapsed,
                            X.shape[0], X.shape[1])


def predict_proba(model: FittedClassifier, X) -> np.ndarray:
    return model.predict_proba(X)
