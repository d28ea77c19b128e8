"""Command-line workflow: generate, train, evaluate, predict.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import (
    VARIANTS,
    EvaluationError,
    cross_validate,
    format_report,
    format_timing,
    stack_spec,
    summary_table,
    top_k,
)
from .features import pca_fit, pca_transform, preprocess
from .io import (
    DataError,
    ModelArtifact,
    atomic_write,
    dataset_fingerprint,
    load_model,
    read_curves_csv,
    save_model,
    write_dataset_csv,
    write_predictions_csv,
)
from .learners import BASE_SUITE, ClassifierSpec, LearnerError, train
from .scatter.models import CLASS_NAMES, SHAPE_CLASSES, ShapeClass
from .scatter.sampling import (
    BACKGROUND_RANGE,
    COUNTS_RANGE,
    SimulationError,
    generate_dataset,
)
from .splits import FoldError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_SEED = 0
DEFAULT_TRAIN = ("random_forest", "gradient_boosted_trees")
STACK_ALIASES = {"top5": "StackedTop5", "all": "StackedAll",
                 "top5-stack": "StackedTop5", "all-stack": "StackedAll"}
VARIANT_FLAGS = {"all": "All", "pca99": "PCA99", "pca95": "PCA95"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _default_out() -> Path:
    return Path(os.environ.get("SCAN_HOME", "."))


def _common(p: argparse.ArgumentParser, dataset: bool = True):
    if dataset:
        p.add_argument("--dataset", required=True, help="curve CSV file")
        p.add_argument("--qgrid", help="q grid CSV (default: qgrid.csv next to the dataset)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default 0)")
    p.add_argument("--out", type=Path, default=None,
                   help="output directory (default: $SCAN_HOME or the working directory)")
    p.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker threads (default: available cores; 1 = serial reference)")


def _selection(p: argparse.ArgumentParser):
    p.add_argument("--classifier", action="append", default=[],
                   help="classifier name, comma list, 'all', 'top5-stack' or 'all-stack'; "
                        "repeatable")
    p.add_argument("--stack", action="append", default=[], choices=["all", "top5"],
                   help="also run a stacked ensemble; repeatable")
    p.add_argument("--variant", action="append", default=[], choices=list(VARIANT_FLAGS),
                   help="input variant; repeatable (default: all)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="saxscan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"saxscan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="simulate a labeled curve dataset")
    _common(g, dataset=False)
    g.add_argument("--curves-per-class", type=_positive_int, default=3000)
    g.add_argument("--classes", default="all", help="comma list of shape classes (default all)")
    g.add_argument("--name", default="dataset.csv", help="dataset file name")
    g.add_argument("--counts", type=float, nargs=2, metavar=("LO", "HI"), default=COUNTS_RANGE,
                   help="log-uniform range of expected counts at the curve maximum")
    g.add_argument("--background", type=float, nargs=2, metavar=("LO", "HI"),
                   default=BACKGROUND_RANGE,
                   help="log-uniform range of the background as a fraction of the curve maximum")
    g.add_argument("--noise-free", action="store_true", help="skip Poisson sampling")

    t = sub.add_parser("train", help="fit classifiers on a labeled dataset")
    _common(t)
    _selection(t)

    e = sub.add_parser("evaluate", help="k-fold cross-validation reports")
    _common(e)
    _selection(e)
    e.add_argument("--full-matrix", action="store_true",
                   help="every classifier, both stacks, all three variants")
    e.add_argument("--folds", type=_positive_int, default=5)

    pr = sub.add_parser("predict", help="classify curves with saved models")
    _common(pr)
    pr.add_argument("--model", action="append", required=True, type=Path,
                    help="model artifact; repeatable")
    pr.add_argument("--name", default="predictions.csv", help="output file name")
    return parser


def _resolve_selection(args) -> tuple[list[str], list[str], list[str]]:
    """Validate names before any work: (classifiers, stack modes, variants)."""
    names, stacks = [], []
    for item in args.classifier:
        for name in filter(None, (s.strip() for s in item.split(","))):
            if name == "all":
                names.extend(BASE_SUITE)
            elif name in STACK_ALIASES:
                stacks.append(STACK_ALIASES[name])
            elif name in BASE_SUITE or name == "logistic_regression":
                names.append(name)
            else:
                raise UsageError(f"unknown classifier {name!r}; choose from "
                                 f"{', '.join(BASE_SUITE)}, all, top5-stack, all-stack")
    stacks.extend(STACK_ALIASES[s] for s in args.stack)
    variants = [VARIANT_FLAGS[v] for v in args.variant] or ["All"]
    if getattr(args, "full_matrix", False):
        names, stacks, variants = list(BASE_SUITE), ["StackedAll", "StackedTop5"], list(VARIANTS)
    return list(dict.fromkeys(names)), list(dict.fromkeys(stacks)), list(dict.fromkeys(variants))


def _out_dir(args) -> Path:
    out = args.out if args.out is not None else _default_out()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, out: Path, extra: dict | None = None) -> None:
    flags = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
             if k != "command"}
    if isinstance(flags.get("model"), list):
        flags["model"] = [str(m) for m in flags["model"]]
    body = {"command": args.command, "flags": flags, "version": __version__, **(extra or {})}
    atomic_write(out / f"{args.command}_manifest.json", json.dumps(body, indent=2, sort_keys=True)
                 + "\n")


def _load_labeled(args):
    ds = read_curves_csv(args.dataset, args.qgrid)
    if ds.labels is None:
        raise DataError(f"{args.dataset}: a labeled dataset is required")
    return ds


def cmd_generate(args) -> int:
    if args.classes == "all":
        classes = list(SHAPE_CLASSES)
    else:
        try:
            classes = [ShapeClass(c.strip()) for c in args.classes.split(",") if c.strip()]
        except ValueError as exc:
            raise UsageError(f"{exc}; choose from {', '.join(CLASS_NAMES)}") from None
    lo, hi = args.counts
    if not 0 < lo <= hi:
        raise UsageError("--counts needs 0 < LO <= HI")
    blo, bhi = args.background
    if not 0 < blo <= bhi:
        raise UsageError("--background needs 0 < LO <= HI")
    out = _out_dir(args)
    ds = generate_dataset(classes, args.curves_per_class, seed=args.seed, threads=args.threads,
                          noise=not args.noise_free, counts_range=(lo, hi),
                          background_range=(blo, bhi))
    path, qpath = write_dataset_csv(ds, out / args.name)
    _manifest(args, out, {"dataset": path.name, "qgrid": qpath.name, "rows": len(ds)})
    counts = ", ".join(f"{k}={v}" for k, v in ds.class_counts.items())
    print(f"generated {len(ds)} curves ({counts}) -> {path}")
    return EXIT_OK


def _rank_for_top5(ds, variant, args) -> list[str]:
    reports = [cross_validate(ClassifierSpec(a, seed=args.seed), ds, variant, args.seed,
                              threads=args.threads) for a in BASE_SUITE]
    return top_k(reports, 5)


def cmd_train(args) -> int:
    names, stacks, variants = _resolve_selection(args)
    if not names and not stacks:
        names = list(DEFAULT_TRAIN)
    ds = _load_labeled(args)
    out = _out_dir(args)
    codes = np.unique(ds.labels)
    class_names = [CLASS_NAMES[c] for c in codes]
    written = []
    for variant in variants:
        fm = preprocess(ds.intensities)
        pca = None
        X = fm.values
        if VARIANTS[variant] is not None:
            pca = pca_fit(fm, variance_threshold=VARIANTS[variant])
            X = pca_transform(pca, fm).values
        specs = [ClassifierSpec(a, seed=args.seed) for a in names]
        for mode in stacks:
            bases = (_rank_for_top5(ds, variant, args) if mode == "StackedTop5"
                     else list(BASE_SUITE))
            specs.append(stack_spec(mode, bases, args.seed))
        for spec in specs:
            model = train(spec, X, ds.labels, threads=args.threads)
            art = ModelArtifact(ds.q, fm.column_means, fm.column_stds, pca, model, class_names,
                                {"seed": args.seed, "variant": variant,
                                 "dataset_fingerprint": dataset_fingerprint(ds),
                                 "version": __version__})
            path = save_model(art, out / f"{spec.name}_{variant}.model")
            written.append(path.name)
            print(f"trained {spec.name} ({variant}) in {model.train_time:.2f}s -> {path}")
    _manifest(args, out, {"models": written})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    names, stacks, variants = _resolve_selection(args)
    if not names and not stacks:
        names = list(BASE_SUITE)
    if "StackedTop5" in stacks or "StackedAll" in stacks:
        # stacks need the individual results of the whole suite
        names = list(dict.fromkeys(list(BASE_SUITE) + names))
    ds = _load_labeled(args)
    out = _out_dir(args)
    reports, failures = [], []

    def emit(rep):
        reports.append(rep)
        stem = f"{rep.classifier}_{rep.variant}"
        atomic_write(out / f"{stem}_report.csv", format_report(rep))
        atomic_write(out / f"{stem}_timing.csv", format_timing(rep))
        print(f"{rep.classifier:24s} {rep.variant:6s} {rep.formatted()}  "
              f"train {rep.train_time:.2f}s eval {rep.eval_time:.2f}s", flush=True)

    for variant in variants:
        individual = []
        for a in names:
            try:
                rep = cross_validate(ClassifierSpec(a, seed=args.seed), ds, variant, args.seed,
                                     args.folds, args.threads)
            except EvaluationError as exc:
                failures.append(f"{a} {variant}: {exc}")
                print(f"FAILED {a} {variant}: {exc}", file=sys.stderr)
                continue
            individual.append(rep)
            emit(rep)
        for mode in stacks:
            bases = (top_k([r for r in individual if r.classifier in BASE_SUITE], 5)
                     if mode == "StackedTop5"
                     else [r.classifier for r in individual if r.classifier in BASE_SUITE])
            try:
                rep = cross_validate(stack_spec(mode, bases, args.seed), ds, variant, args.seed,
                                     args.folds, args.threads)
            except (EvaluationError, LearnerError) as exc:
                failures.append(f"{mode} {variant}: {exc}")
                print(f"FAILED {mode} {variant}: {exc}", file=sys.stderr)
                continue
            emit(rep)
    if reports:
        atomic_write(out / "summary.txt", summary_table(reports))
    _manifest(args, out, {"reports": len(reports), "failures": failures})
    return EXIT_NUMERIC if failures else EXIT_OK


def cmd_predict(args) -> int:
    ds = read_curves_csv(args.dataset, args.qgrid)
    out = _out_dir(args)
    arts = [load_model(p) for p in args.model]
    preds = {}
    for path, art in zip(args.model, arts):
        art.check_grid(ds.q)
        name = art.name
        if name in preds:
            name = f"{name}_{path.stem}"
        proba = art.predict_proba(ds.intensities)
        preds[name] = (proba, art.class_names)
        if ds.labels is not None:
            codes = np.array([CLASS_NAMES.index(n) for n in art.class_names])
            acc = float(np.mean(codes[np.argmax(proba, axis=1)] == ds.labels))
            print(f"{name}: accuracy {acc:.6f} on {len(ds)} labeled curves")
    path = write_predictions_csv(out / args.name, preds)
    _manifest(args, out, {"predictions": path.name})
    print(f"wrote {len(ds)} predictions -> {path}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "evaluate": cmd_evaluate,
            "predict": cmd_predict}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"saxscan {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FoldError, LearnerError, EvaluationError, OSError) as exc:
        print(f"saxscan {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ArithmeticError, np.linalg.LinAlgError, SimulationError) as exc:
        print(f"saxscan {args.command}: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
