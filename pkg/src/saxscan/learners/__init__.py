"""Classifier families behind one train / predict-probability contract."""
from .base import (
    ALGORITHMS,
    BASE_SUITE,
    ClassifierSpec,
    DegenerateLabelError,
    DimensionMismatchError,
    FittedClassifier,
    LearnerError,
    NonFiniteFeatureError,
    StackedModel,
    StackSpec,
    default_params,
    predict_proba,
    train,
    train_stacked,
)
from ..splits import FoldError

__all__ = [
    "ALGORITHMS",
    "BASE_SUITE",
    "ClassifierSpec",
    "DegenerateLabelError",
    "DimensionMismatchError",
    "FittedClassifier",
    "FoldError",
    "LearnerError",
    "NonFiniteFeatureError",
    "StackedModel",
    "StackSpec",
    "default_params",
    "predict_proba",
    "train",
    "train_stacked",
]
