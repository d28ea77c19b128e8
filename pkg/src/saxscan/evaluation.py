"""Stratified k-fold cross-validation of classifiers and stacks."""
from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import numpy as np

from .features import pca_fit, pca_transform, preprocess
from .learners import BASE_SUITE, ClassifierSpec, StackSpec, train
from .scatter.models import CLASS_NAMES
from .splits import FoldError, kfold_split

VARIANTS = {"All": None, "PCA99": 0.99, "PCA95": 0.95}


class EvaluationError(RuntimeError):
    def __init__(self, message: str, fold: int | None = None):
        super().__init__(message)
        self.fold = fold


@dataclass
class EvalReport:
    classifier: str
    variant: str
    fold_accuracies: np.ndarray
    confusion: np.ndarray
    class_codes: np.ndarray
    train_time: float = 0.0
    eval_time: float = 0.0
    n_components: list[int] = field(default_factory=list)
    base_classifiers: list[str] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self) -> float:
        # population standard deviation over folds
        return float(np.std(self.fold_accuracies))

    @property
    def pooled_accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())

    def formatted(self) -> str:
        return f"{self.mean:.3f} ({self.std:.3f})"


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Counts with true class along rows and predicted class along columns."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"label arrays differ in shape: {y_true.shape} vs {y_pred.shape}")
    for name, arr in (("true", y_true), ("predicted", y_pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValueError(f"{name} labels must lie in [0, {n_classes})")
    out = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(out, (y_true, y_pred), 1)
    return out


def fold_features(train_curves, test_curves, variant: str):
    """Fit the feature transform on the training split only and apply it to both."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown input variant {variant!r}; choose from {', '.join(VARIANTS)}")
    ftr = preprocess(train_curves)
    fte = preprocess(test_curves, reference=ftr)
    threshold = VARIANTS[variant]
    if threshold is None:
        return ftr.values, fte.values, None
    pca = pca_fit(ftr, variance_threshold=threshold)
    return pca_transform(pca, ftr).values, pca_transform(pca, fte).values, pca


def cross_validate(spec: ClassifierSpec | StackSpec, dataset, variant: str = "All",
                   seed: int = 0, folds: int = 5, threads: int = 1) -> EvalReport:
    """k-fold accuracy, pooled confusion matrix and wall-clock timings."""
    if dataset.labels is None:
        raise EvaluationError("cross-validation needs a labeled dataset")
    codes, y = np.unique(dataset.labels, return_inverse=True)
    K = codes.size
    try:
        splits = kfold_split(len(y), folds, y, seed)
    except FoldError as exc:
        raise EvaluationError(f"cannot build folds: {exc}") from exc

    accs, comps = [], []
    conf = np.zeros((K, K), dtype=np.int64)
    train_time = eval_time = 0.0
    for f, test in enumerate(splits):
        fit_rows = np.setdiff1d(np.arange(len(y)), test)
        try:
            Xtr, Xte, pca = fold_features(dataset.intensities[fit_rows],
                                          dataset.intensities[test], variant)
            t0 = time.perf_counter()
            model = train(spec, Xtr, y[fit_rows], threads=threads)
            t1 = time.perf_counter()
            pred = model.predict(Xte)
            t2 = time.perf_counter()
        except Exception as exc:
            raise EvaluationError(f"{spec.name} fold {f}: {exc}", fold=f) from exc
        train_time += t1 - t0
        eval_time += t2 - t1
        c = confusion_matrix(y[test], pred, K)
        conf += c
        accs.append(np.trace(c) / c.sum())
        if pca is not None:
            comps.append(pca.n_components)
    bases = [b.name for b in spec.base_specs] if isinstance(spec, StackSpec) else []
    return EvalReport(spec.name, variant, np.array(accs), conf, codes, train_time, eval_time,
                      comps, bases)


def top_k(reports: list[EvalReport], k: int = 5) -> list[str]:
    """Names of the ``k`` best individual classifiers by mean accuracy.

    Ties keep the order in which the reports were given.
    """
    ranked = sorted(range(len(reports)), key=lambda i: -reports[i].mean)
    return [reports[i].classifier for i in ranked[:k]]


def stack_spec(mode: str, base_names, seed: int = 0) -> StackSpec:
    return StackSpec(tuple(ClassifierSpec(a, seed=seed) for a in base_names), mode=mode,
                     seed=seed)


def evaluate_suite(dataset, algorithms=BASE_SUITE, variants=("All",),
                   stacks=("StackedTop5",), seed: int = 0, folds: int = 5, threads: int = 1,
                   progress=None) -> list[EvalReport]:
    """Cross-validate every algorithm, then the requested stacks, per variant.

    ``StackedTop5`` uses the five best individual classifiers of the same
    variant; ``StackedAll`` uses every individual classifier evaluated.
    """
    reports = []
    for variant in variants:
        individual = []
        for name in algorithms:
            rep = cross_validate(ClassifierSpec(name, seed=seed), dataset, variant, seed, folds,
                                 threads)
            individual.append(rep)
            if progress:
                progress(rep)
        reports.extend(individual)
        for mode in stacks:
            if mode == "StackedTop5":
                names = top_k(individual, 5)
            elif mode == "StackedAll":
                names = [r.classifier for r in individual]
            else:
                raise ValueError(f"unknown stack mode {mode!r}")
            rep = cross_validate(stack_spec(mode, names, seed), dataset, variant, seed, folds,
                                 threads)
            reports.append(rep)
            if progress:
                progress(rep)
    return reports


def _class_names(codes) -> list[str]:
    return [CLASS_NAMES[c] if 0 <= c < len(CLASS_NAMES) else str(c) for c in codes]


def format_report(rep: EvalReport) -> str:
    """CSV text of a report: fold accuracies, summary, then the confusion block.

    Timings are kept out so identical runs give identical files.
    """
    buf = io.StringIO()
    buf.write(f"classifier,{rep.classifier}\n")
    buf.write(f"variant,{rep.variant}\n")
    if rep.base_classifiers:
        buf.write("base_classifiers," + ";".join(rep.base_classifiers) + "\n")
    buf.write("fold,accuracy\n")
    for i, a in enumerate(rep.fold_accuracies):
        buf.write(f"{i},{a:.12f}\n")
    buf.write(f"mean,{rep.mean:.12f}\n")
    buf.write(f"std,{rep.std:.12f}\n")
    if rep.n_components:
        buf.write("n_components," + ";".join(str(c) for c in rep.n_components) + "\n")
    names = _class_names(rep.class_codes)
    buf.write("confusion," + ",".join(names) + "\n")
    for name, row in zip(names, rep.confusion):
        buf.write(name + "," + ",".join(str(int(v)) for v in row) + "\n")
    return buf.getvalue()


def format_timing(rep: EvalReport) -> str:
    return (f"classifier,variant,train_time_s,eval_time_s\n"
            f"{rep.classifier},{rep.variant},{rep.train_time:.6f},{rep.eval_time:.6f}\n")


def summary_table(reports: list[EvalReport]) -> str:
    """Accuracy table, one row per classifier and one column per variant."""
    variants = list(dict.fromkeys(r.variant for r in reports))
    names = list(dict.fromkeys(r.classifier for r in reports))
    cell = {(r.classifier, r.variant): r.formatted() for r in reports}
    width = max(len(n) for n in names) + 2
    lines = ["classifier".ljust(width) + "".join(v.ljust(16) for v in variants)]
    for n in names:
        lines.append(n.ljust(width) + "".join(cell.get((n, v), "-").ljust(16) for v in variants))
    return "\n".join(line.rstrip() for line in lines) + "\n"
