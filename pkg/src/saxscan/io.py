"""CSV schemas for curves and predictions, and the model artifact container.

Artifact layout (all integers little-endian)::

    8 bytes   magic  b"SAXSCANM"
    4 bytes   uint32 format version
    32 bytes  SHA-256 digest of the payload
    8 bytes   uint64 payload length
    N bytes   payload (pickled ModelArtifact fields)
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import pickle
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .features import FeatureMatrix, PcaModel, pca_transform, preprocess
from .learners import FittedClassifier
from .scatter.models import CLASS_NAMES, ShapeClass, flat_params, params_from_dict, params_to_dict
from .scatter.sampling import Dataset

N_PARAM_SLOTS = 12
INTENSITY_FORMAT = "{:.9g}"
MAGIC = b"SAXSCANM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sI32sQ")


class DataError(ValueError):
    """Malformed or inconsistent input files."""


class ArtifactError(DataError):
    pass


class ChecksumError(ArtifactError):
    pass


class VersionError(ArtifactError):
    pass


class GridMismatchError(DataError):
    pass


def atomic_write(path, data: bytes | str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(x: float) -> str:
    # repr-style formatting is locale independent in Python
    return INTENSITY_FORMAT.format(float(x))


def _label_name(code: int) -> str:
    return CLASS_NAMES[code] if 0 <= code < len(CLASS_NAMES) else str(code)


def dataset_csv_text(ds: Dataset) -> str:
    n = ds.intensities.shape[1]
    header = (["label"] + [f"p{i}" for i in range(N_PARAM_SLOTS)] + ["meta_json"]
              + [f"I_{j}" for j in range(n)])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i, row in enumerate(ds.intensities):
        label = "" if ds.labels is None else _label_name(int(ds.labels[i]))
        p = ds.params[i] if i < len(ds.params) else None
        slots = [_fmt(v) for v in flat_params(p)] if p is not None else []
        slots += [""] * (N_PARAM_SLOTS - len(slots))
        meta = dict(ds.meta[i]) if i < len(ds.meta) else {}
        if p is not None:
            meta["params"] = params_to_dict(p)
        w.writerow([label] + slots + [json.dumps(meta, sort_keys=True)]
                   + [_fmt(v) for v in row])
    return buf.getvalue()


def qgrid_csv_text(q: np.ndarray) -> str:
    return "q\n" + "".join(f"{float(v)!r}\n" for v in q)


def write_dataset_csv(ds: Dataset, path, qgrid_path=None) -> tuple[Path, Path]:
    """Write the curve table and its companion q-grid file (default ``qgrid.csv`` alongside)."""
    path = Path(path)
    qpath = Path(qgrid_path) if qgrid_path else path.parent / "qgrid.csv"
    atomic_write(qpath, qgrid_csv_text(ds.q))
    atomic_write(path, dataset_csv_text(ds))
    return path, qpath


def read_qgrid_csv(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataError(f"q grid file not found: {path}")
    values = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (lineno == 1 and row[0].strip().lower() == "q"):
                continue
            try:
                v = float(row[0])
            except ValueError:
                raise DataError(f"{path}: line {lineno}: non-numeric q value {row[0]!r}") from None
            if not math.isfinite(v) or v <= 0:
                raise DataError(f"{path}: line {lineno}: q must be finite and positive")
            values.append(v)
    q = np.array(values)
    if q.size < 2 or np.any(np.diff(q) <= 0):
        raise DataError(f"{path}: q grid must hold at least two strictly increasing values")
    return q


def _parse_label(text: str, lineno: int, path) -> int:
    try:
        return ShapeClass(text).code
    except ValueError:
        pass
    try:
        code = int(text)
    except ValueError:
        raise DataError(f"{path}: line {lineno}: unknown class label {text!r}") from None
    if not 0 <= code < len(CLASS_NAMES):
        raise DataError(f"{path}: line {lineno}: class code {code} out of range")
    return code


def read_curves_csv(path, qgrid_path=None) -> Dataset:
    """Read a curve table; the ``label``, ``p*`` and ``meta_json`` columns are optional.

    Unlabeled files (no label column, or every label empty) give a dataset
    with ``labels=None``.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"curve file not found: {path}")
    qpath = Path(qgrid_path) if qgrid_path else path.parent / "qgrid.csv"
    q = read_qgrid_csv(qpath)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        icols = [i for i, h in enumerate(header) if h.startswith("I_")]
        if not icols:
            raise DataError(f"{path}: header has no intensity columns I_0, I_1, ...")
        expected = [f"I_{j}" for j in range(len(icols))]
        if [header[i] for i in icols] != expected or icols[-1] != len(header) - 1:
            raise DataError(f"{path}: intensity columns must be I_0..I_{len(icols) - 1}, last")
        if len(icols) != q.size:
            raise GridMismatchError(
                f"{path}: line 1: {len(icols)} intensity columns but the q grid has "
                f"{q.size} points")
        first = icols[0]
        label_col = header.index("label") if "label" in header[:first] else None
        meta_col = header.index("meta_json") if "meta_json" in header[:first] else None

        rows, labels, metas, params = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: line {lineno}: expected {len(header)} cells, "
                                f"found {len(row)}")
            try:
                vals = np.array([float(c) for c in row[first:]])
            except ValueError:
                bad = next(c for c in row[first:] if not _is_float(c))
                raise DataError(f"{path}: line {lineno}: non-numeric intensity {bad!r}") from None
            if not np.all(np.isfinite(vals)):
                raise DataError(f"{path}: line {lineno}: non-finite intensity")
            if np.any(vals < 0):
                raise DataError(f"{path}: line {lineno}: negative intensity")
            rows.append(vals)
            text = row[label_col].strip() if label_col is not None else ""
            labels.append(_parse_label(text, lineno, path) if text else None)
            meta = {}
            if meta_col is not None and row[meta_col].strip():
                try:
                    meta = json.loads(row[meta_col])
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}: line {lineno}: bad meta_json: {exc}") from None
            p = meta.pop("params", None)
            if p is not None and labels[-1] is not None:
                p = params_from_dict(ShapeClass.from_code(labels[-1]), p)
            params.append(p)
            metas.append(meta)
    if not rows:
        raise DataError(f"{path}: no curves")
    present = [lab is not None for lab in labels]
    if any(present) and not all(present):
        missing = present.index(False) + 2
        raise DataError(f"{path}: line {missing}: missing label in a labeled file")
    lab = np.array(labels, dtype=np.int64) if all(present) else None
    keep_params = params if any(p is not None for p in params) else []
    return Dataset(q, np.vstack(rows), lab, keep_params, metas)


def _is_float(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def predictions_csv_text(predictions: Mapping[str, tuple[np.ndarray, Sequence[str]]],
                         row_ids: Sequence | None = None) -> str:
    """``predictions`` maps classifier name -> (probabilities N x K, class names)."""
    if not predictions:
        raise DataError("no predictions to write")
    sizes = {name: np.asarray(p).shape[0] for name, (p, _) in predictions.items()}
    n = next(iter(sizes.values()))
    if any(s != n for s in sizes.values()):
        raise DataError(f"prediction row counts differ: {sizes}")
    ids = list(range(n)) if row_ids is None else list(row_ids)
    if len(ids) != n:
        raise DataError(f"{len(ids)} row ids for {n} predictions")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["row_id"]
    for name in predictions:
        header += [f"{name}_label", f"{name}_confidence"]
    w.writerow(header)
    cols = []
    for proba, names in predictions.values():
        proba = np.asarray(proba)
        best = np.argmax(proba, axis=1)
        cols.append(([names[b] for b in best], proba[np.arange(n), best]))
    for i in range(n):
        row = [ids[i]]
        for labels, conf in cols:
            row += [labels[i], f"{conf[i]:.6f}"]
        w.writerow(row)
    return buf.getvalue()


def write_predictions_csv(path, predictions, row_ids=None) -> Path:
    return atomic_write(path, predictions_csv_text(predictions, row_ids))


@dataclass
class ModelArtifact:
    """Preprocessing, optional PCA and a fitted classifier, applied to raw curves."""

    q: np.ndarray
    feature_means: np.ndarray
    feature_stds: np.ndarray
    pca: PcaModel | None
    classifier: FittedClassifier
    class_names: list[str]
    metadata: dict[str, Any] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @property
    def name(self) -> str:
        return self.classifier.spec.name

    def features(self, intensities) -> np.ndarray:
        ref = FeatureMatrix(np.empty((0, self.q.size)), self.feature_means, self.feature_stds)
        fm = preprocess(intensities, reference=ref)
        return fm.values if self.pca is None else pca_transform(self.pca, fm).values

    def predict_proba(self, intensities) -> np.ndarray:
        return self.classifier.predict_proba(self.features(intensities))

    def check_grid(self, q: np.ndarray) -> None:
        q = np.asarray(q, dtype=float)
        if q.shape != self.q.shape or not np.allclose(q, self.q, rtol=1e-9, atol=0.0):
            raise GridMismatchError(
                f"q grid of the input ({q.size} points, {q[0]:.6g}..{q[-1]:.6g}) does not match "
                f"the model grid ({self.q.size} points, {self.q[0]:.6g}..{self.q[-1]:.6g})")


def dataset_fingerprint(ds: Dataset) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(ds.q).tobytes())
    h.update(np.ascontiguousarray(ds.intensities).tobytes())
    if ds.labels is not None:
        h.update(np.ascontiguousarray(ds.labels).tobytes())
    return h.hexdigest()


def artifact_bytes(artifact: ModelArtifact) -> bytes:
    payload = pickle.dumps(artifact, protocol=pickle.HIGHEST_PROTOCOL)
    digest = hashlib.sha256(payload).digest()
    return _HEADER.pack(MAGIC, artifact.format_version, digest, len(payload)) + payload


def save_model(artifact: ModelArtifact, path) -> Path:
    return atomic_write(path, artifact_bytes(artifact))


def load_model(path) -> ModelArtifact:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"model file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ArtifactError(f"{path}: truncated header")
    magic, version, digest, length = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ArtifactError(f"{path}: not a model artifact")
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: artifact format version {version}, "
                           f"this build reads version {FORMAT_VERSION}")
    payload = raw[_HEADER.size:]
    if len(payload) != length:
        raise ArtifactError(f"{path}: truncated payload ({len(payload)} of {length} bytes)")
    if hashlib.sha256(payload).digest() != digest:
        raise ChecksumError(f"{path}: checksum mismatch, file is corrupted")
    artifact = pickle.loads(payload)
    if not isinstance(artifact, ModelArtifact):
        raise ArtifactError(f"{path}: payload is not a model artifact")
    return artifact
