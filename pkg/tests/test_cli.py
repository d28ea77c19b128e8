import csv
import json

import numpy as np
import pytest

import saxscan.cli as cli
from saxscan.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from saxscan.evaluation import cross_validate
from saxscan.io import load_model, read_curves_csv, write_dataset_csv
from saxscan.learners import ClassifierSpec
from saxscan.scatter import Dataset, SimulationError, make_qgrid

CLASSES = "sphere,dab,teubner_strey"


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert run("generate", "--classes", CLASSES, "--curves-per-class", 10, "--seed", 3,
               "--out", out, "--threads", 1) == EXIT_OK
    return out


def test_generate_single_curve(tmp_path, capsys):
    assert run("generate", "--classes", "sphere", "--curves-per-class", 1, "--out", tmp_path,
               "--threads", 1) == EXIT_OK
    rows = list(csv.reader(open(tmp_path / "dataset.csv")))
    assert len(rows) == 2 and rows[1][0] == "sphere"
    assert len(list(csv.reader(open(tmp_path / "qgrid.csv")))) == 501
    assert "generated 1 curves (sphere=1)" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "generate_manifest.json").read_text())
    assert manifest["flags"]["seed"] == 0 and manifest["flags"]["curves_per_class"] == 1
    assert manifest["rows"] == 1


def test_generate_is_byte_identical_across_runs_and_threads(tmp_path, data_dir):
    for threads in (1, 3):
        out = tmp_path / f"t{threads}"
        assert run("generate", "--classes", CLASSES, "--curves-per-class", 10, "--seed", 3,
                   "--out", out, "--threads", threads) == EXIT_OK
        for name in ("dataset.csv", "qgrid.csv"):
            assert (out / name).read_bytes() == (data_dir / name).read_bytes()


def test_generate_seed_changes_output(tmp_path, data_dir):
    run("generate", "--classes", CLASSES, "--curves-per-class", 10, "--seed", 4, "--out",
        tmp_path, "--threads", 1)
    assert (tmp_path / "dataset.csv").read_bytes() != (data_dir / "dataset.csv").read_bytes()


def test_scan_home_is_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv("SCAN_HOME", str(tmp_path / "home"))
    assert run("generate", "--classes", "dab", "--curves-per-class", 1, "--threads", 1) == 0
    assert (tmp_path / "home" / "dataset.csv").exists()


@pytest.mark.parametrize("argv", [
    ["generate", "--classes", "torus"],
    ["generate", "--counts", "10", "1"],
    ["generate", "--background", "0", "1e-3"],
    ["generate", "--curves-per-class", "0"],
    ["frobnicate"],
    [],
])
def test_usage_errors(argv, tmp_path, capsys):
    assert run(*argv, *(["--out", tmp_path] if argv and argv[0] == "generate" else [])) \
        == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_unknown_classifier_rejected_before_work(data_dir, tmp_path, monkeypatch, capsys):
    def never(*a, **k):
        raise AssertionError("dataset should not be read")

    monkeypatch.setattr(cli, "read_curves_csv", never)
    for command in ("train", "evaluate"):
        code = run(command, "--dataset", data_dir / "dataset.csv", "--classifier", "svm",
                   "--out", tmp_path)
        assert code == EXIT_USAGE
    assert "unknown classifier 'svm'" in capsys.readouterr().err


def test_help_and_version_exit_zero(capsys):
    assert run("--version") == EXIT_OK
    assert "saxscan" in capsys.readouterr().out
    assert run("generate", "--help") == EXIT_OK


def test_missing_dataset_is_data_error(tmp_path, capsys):
    code = run("evaluate", "--dataset", tmp_path / "none.csv", "--out", tmp_path)
    assert code == EXIT_DATA
    assert "not found" in capsys.readouterr().err


def test_unlabeled_dataset_rejected_for_training(data_dir, tmp_path):
    ds = read_curves_csv(data_dir / "dataset.csv")
    write_dataset_csv(Dataset(ds.q, ds.intensities), tmp_path / "u.csv")
    assert run("train", "--dataset", tmp_path / "u.csv", "--out", tmp_path) == EXIT_DATA


def test_simulation_failure_is_numeric(tmp_path, monkeypatch):
    def fail(*a, **k):
        raise SimulationError("sphere curve #0 (seed 0): overflow")

    monkeypatch.setattr(cli, "generate_dataset", fail)
    assert run("generate", "--out", tmp_path) == EXIT_NUMERIC


def test_failed_combination_does_not_stop_the_rest(data_dir, tmp_path, monkeypatch, capsys):
    real = cli.cross_validate

    def flaky(spec, *a, **k):
        if spec.name == "knn":
            from saxscan.evaluation import EvaluationError
            raise EvaluationError("knn fold 2: singular", fold=2)
        return real(spec, *a, **k)

    monkeypatch.setattr(cli, "cross_validate", flaky)
    code = run("evaluate", "--dataset", data_dir / "dataset.csv", "--classifier",
               "knn,gaussian_nb", "--out", tmp_path, "--threads", 1)
    assert code == EXIT_NUMERIC
    assert (tmp_path / "gaussian_nb_All_report.csv").exists()
    assert not (tmp_path / "knn_All_report.csv").exists()
    manifest = json.loads((tmp_path / "evaluate_manifest.json").read_text())
    assert manifest["failures"] == ["knn All: knn fold 2: singular"]


def test_single_report(data_dir, tmp_path, capsys):
    code = run("evaluate", "--dataset", data_dir / "dataset.csv", "--classifier", "knn",
               "--variant", "pca95", "--out", tmp_path, "--threads", 1)
    assert code == EXIT_OK
    assert sorted(p.name for p in tmp_path.glob("*_report.csv")) == ["knn_PCA95_report.csv"]
    line = capsys.readouterr().out.splitlines()[0]
    assert line.split()[:4][:2] == ["knn", "PCA95"]
    assert line.split()[2].count(".") == 1 and line.split()[3].startswith("(")


def _evaluate(data_dir, out, threads):
    return run("evaluate", "--dataset", data_dir / "dataset.csv", "--classifier",
               "random_forest,decision_tree,gbt_random_forest", "--variant", "all",
               "--variant", "pca99", "--out", out, "--threads", threads, "--seed", 2)


def test_evaluate_reports_identical_across_runs_and_threads(data_dir, tmp_path):
    for name, threads in (("a", 1), ("b", 1), ("c", 3)):
        assert _evaluate(data_dir, tmp_path / name, threads) == EXIT_OK
    reports = sorted(p.name for p in (tmp_path / "a").glob("*_report.csv"))
    assert len(reports) == 6
    for other in ("b", "c"):
        for name in reports + ["summary.txt"]:
            assert (tmp_path / other / name).read_bytes() == (tmp_path / "a" / name).read_bytes()
    manifests = [json.loads((tmp_path / n / "evaluate_manifest.json").read_text())
                 for n in ("a", "b")]
    for m in manifests:
        m["flags"].pop("out")
    assert manifests[0] == manifests[1]


def test_train_defaults_and_round_trip(data_dir, tmp_path, capsys):
    assert run("train", "--dataset", data_dir / "dataset.csv", "--out", tmp_path,
               "--threads", 1) == EXIT_OK
    names = sorted(p.name for p in tmp_path.glob("*.model"))
    assert names == ["gradient_boosted_trees_All.model", "random_forest_All.model"]
    ds = read_curves_csv(data_dir / "dataset.csv")
    art = load_model(tmp_path / "random_forest_All.model")
    p1, p2 = art.predict_proba(ds.intensities), art.predict_proba(ds.intensities)
    np.testing.assert_array_equal(p1, p2)
    assert art.metadata["seed"] == 0 and len(art.metadata["dataset_fingerprint"]) == 64


def test_train_is_reproducible_across_threads(data_dir, tmp_path):
    preds = []
    for threads in (1, 3):
        out = tmp_path / str(threads)
        run("train", "--dataset", data_dir / "dataset.csv", "--classifier", "random_forest",
            "--out", out, "--threads", threads)
        run("predict", "--dataset", data_dir / "dataset.csv", "--model",
            out / "random_forest_All.model", "--out", out, "--threads", threads)
        preds.append((out / "predictions.csv").read_bytes())
    assert preds[0] == preds[1]


def test_pca_pipeline_embedded(data_dir, tmp_path, capsys):
    assert run("train", "--dataset", data_dir / "dataset.csv", "--classifier", "knn",
               "--variant", "pca99", "--out", tmp_path) == EXIT_OK
    art = load_model(tmp_path / "knn_PCA99.model")
    assert art.pca is not None
    curve = read_curves_csv(data_dir / "dataset.csv").intensities[:1]
    assert curve.shape == (1, 500)
    p = art.predict_proba(curve)
    assert p.shape == (1, 3) and p.sum() == pytest.approx(1.0)


def test_predict_accuracy_matches_in_memory(data_dir, tmp_path, capsys):
    run("train", "--dataset", data_dir / "dataset.csv", "--classifier", "decision_tree,knn",
        "--out", tmp_path)
    capsys.readouterr()
    code = run("predict", "--dataset", data_dir / "dataset.csv", "--model",
               tmp_path / "decision_tree_All.model", "--model", tmp_path / "knn_All.model",
               "--out", tmp_path)
    assert code == EXIT_OK
    out = capsys.readouterr().out
    ds = read_curves_csv(data_dir / "dataset.csv")
    for name in ("decision_tree", "knn"):
        art = load_model(tmp_path / f"{name}_All.model")
        pred = np.unique(ds.labels)[np.argmax(art.predict_proba(ds.intensities), axis=1)]
        acc = float(np.mean(pred == ds.labels))
        assert f"{name}: accuracy {acc:.6f} on 30 labeled curves" in out
    header = next(csv.reader(open(tmp_path / "predictions.csv")))
    assert header == ["row_id", "decision_tree_label", "decision_tree_confidence",
                      "knn_label", "knn_confidence"]


def test_predict_grid_mismatch(data_dir, tmp_path, capsys):
    run("train", "--dataset", data_dir / "dataset.csv", "--classifier", "gaussian_nb",
        "--out", tmp_path)
    q = make_qgrid(q_max=2.5)
    write_dataset_csv(Dataset(q, np.ones((2, 500))), tmp_path / "other" / "x.csv")
    code = run("predict", "--dataset", tmp_path / "other" / "x.csv", "--model",
               tmp_path / "gaussian_nb_All.model", "--out", tmp_path)
    assert code == EXIT_DATA
    assert "does not match the model grid" in capsys.readouterr().err
    assert not (tmp_path / "predictions.csv").exists()


def test_evaluation_matches_library(data_dir, tmp_path):
    run("evaluate", "--dataset", data_dir / "dataset.csv", "--classifier", "gaussian_nb",
        "--out", tmp_path, "--seed", 5)
    ds = read_curves_csv(data_dir / "dataset.csv")
    rep = cross_validate(ClassifierSpec("gaussian_nb", seed=5), ds, "All", seed=5)
    text = (tmp_path / "gaussian_nb_All_report.csv").read_text()
    assert f"mean,{rep.mean:.12f}" in text


@pytest.mark.slow
def test_full_matrix_writes_33_reports(data_dir, tmp_path):
    code = run("evaluate", "--dataset", data_dir / "dataset.csv", "--full-matrix", "--out",
               tmp_path, "--threads", 1)
    assert code == EXIT_OK
    assert len(list(tmp_path.glob("*_report.csv"))) == 33
    assert len(list(tmp_path.glob("*_timing.csv"))) == 33
    stack = (tmp_path / "StackedTop5_PCA95_report.csv").read_text()
    assert stack.splitlines()[2].startswith("base_classifiers,")
    assert len(stack.splitlines()[2].split(",")[1].split(";")) == 5
