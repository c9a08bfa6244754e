"""Datasets, splits, label bucketing and the on-disk matrix/label formats.

TMX matrix format::

    tmx 1 <rows> <cols>
    <cols space-separated floats>      (one line per row)

Floats are written with ``repr`` so a write/read cycle is bit-exact.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPLITS = ("train", "valid", "test")
TASKS = ("classification", "regression")


class DataFormatError(ValueError):
    """Raised for malformed or inconsistent dataset files."""


class ConfigError(ValueError):
    """Raised for an invalid run configuration."""


# ---------------------------------------------------------------------------
# atomic file output
# ---------------------------------------------------------------------------

def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# TMX matrices
# ---------------------------------------------------------------------------

def format_tmx(matrix) -> str:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise DataFormatError(f"TMX holds 2-D matrices, got shape {m.shape}")
    rows, cols = m.shape
    lines = [f"tmx 1 {rows} {cols}"]
    lines.extend(" ".join(_fmt(v) for v in row) for row in m)
    return "\n".join(lines) + "\n"


def write_tmx(path, matrix) -> None:
    atomic_write_text(path, format_tmx(matrix))


def parse_tmx(text: str, source="<string>") -> np.ndarray:
    head, _, body = text.partition("\n")
    parts = head.split()
    if len(parts) != 4 or parts[0] != "tmx" or parts[1] != "1":
        raise DataFormatError(f"{source}: bad TMX header {head!r}")
    try:
        rows, cols = int(parts[2]), int(parts[3])
    except ValueError:
        raise DataFormatError(f"{source}: bad TMX header {head!r}") from None
    lines = [ln for ln in body.split("\n") if ln.strip()]
    if len(lines) != rows:
        raise DataFormatError(f"{source}: header says {rows} rows, found {len(lines)}")
    out = np.empty((rows, cols), dtype=np.float64)
    for i, ln in enumerate(lines):
        vals = ln.split()
        if len(vals) != cols:
            raise DataFormatError(f"{source}: row {i} has {len(vals)} values, expected {cols}")
        try:
            out[i] = [float(v) for v in vals]
        except ValueError as exc:
            raise DataFormatError(f"{source}: row {i}: {exc}") from None
    return out


def read_tmx(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing file: {path}")
    return parse_tmx(path.read_text(encoding="utf-8"), source=str(path))


# ---------------------------------------------------------------------------
# label and split CSVs
# ---------------------------------------------------------------------------

def _read_csv_rows(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError(f"{path}: empty CSV")
        rows = [r for r in reader if r]
    return [h.strip() for h in header], rows


def _check_row_index(path, rows):
    idx = [int(r[0]) for r in rows]
    if idx != list(range(len(idx))):
        raise DataFormatError(f"{path}: row column must be 0..n-1 in order")


def read_labels(path) -> tuple[np.ndarray, str]:
    """Read a label CSV; returns (labels, task)."""
    header, rows = _read_csv_rows(path)
    _check_row_index(path, rows)
    if header == ["row", "label"]:
        try:
            return np.array([int(r[1]) for r in rows], dtype=np.int64), "classification"
        except ValueError:
            raise DataFormatError(f"{path}: categorical labels must be integers") from None
    if header in (["row", "y0"], ["row", "y0", "y1"]):
        d = len(header) - 1
        vals = np.array([[float(v) for v in r[1:1 + d]] for r in rows], dtype=np.float64)
        return vals.reshape(len(rows), d), "regression"
    raise DataFormatError(f"{path}: unknown label header {header}")


def format_labels(labels) -> str:
    labels = np.asarray(labels)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if labels.dtype.kind in "iu":
        w.writerow(["row", "label"])
        for i, v in enumerate(labels):
            w.writerow([i, int(v)])
    else:
        lab = labels.reshape(len(labels), -1)
        w.writerow(["row"] + [f"y{j}" for j in range(lab.shape[1])])
        for i, v in enumerate(lab):
            w.writerow([i] + [_fmt(x) for x in v])
    return buf.getvalue()


def write_labels(path, labels) -> None:
    atomic_write_text(path, format_labels(labels))


def read_splits(path) -> np.ndarray:
    header, rows = _read_csv_rows(path)
    if header != ["row", "split"]:
        raise DataFormatError(f"{path}: split file header must be row,split")
    _check_row_index(path, rows)
    tags = [r[1].strip() for r in rows]
    bad = sorted(set(tags) - set(SPLITS))
    if bad:
        raise DataFormatError(f"{path}: unknown split tag(s) {bad}")
    return np.array(tags, dtype=object)


def write_splits(path, split) -> None:
    lines = ["row,split"] + [f"{i},{s}" for i, s in enumerate(split)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_assignments(path, ids) -> None:
    lines = ["row,cluster"] + [f"{i},{int(c)}" for i, c in enumerate(ids)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_assignments(path) -> np.ndarray:
    header, rows = _read_csv_rows(path)
    if header != ["row", "cluster"]:
        raise DataFormatError(f"{path}: assignment file header must be row,cluster")
    _check_row_index(path, rows)
    return np.array([int(r[1]) for r in rows], dtype=np.int64)


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------

def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    split: np.ndarray
    task: str
    n_classes: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen(np.asarray(self.features, dtype=np.float64)))
        object.__setattr__(self, "split", _frozen(np.asarray(self.split, dtype=object)))
        if self.task not in TASKS:
            raise DataFormatError(f"unknown task {self.task!r}")
        if self.task == "classification":
            labels = np.asarray(self.labels)
            if labels.dtype.kind not in "iu":
                raise DataFormatError("classification labels must be integer ids")
            labels = labels.astype(np.int64)
        else:
            labels = np.asarray(self.labels, dtype=np.float64)
            labels = labels.reshape(len(labels), -1)
            if labels.shape[1] not in (1, 2):
                raise DataFormatError("regression labels must have dimension 1 or 2")
        object.__setattr__(self, "labels", _frozen(labels))
        self.validate()

    def validate(self):
        n = self.features.shape[0]
        if self.features.ndim != 2:
            raise DataFormatError("features must be a 2-D matrix")
        if len(self.labels) != n or len(self.split) != n:
            raise DataFormatError(
                f"row-count mismatch: features {n}, labels {len(self.labels)}, splits {len(self.split)}"
            )
        bad = sorted(set(self.split.tolist()) - set(SPLITS))
        if bad:
            raise DataFormatError(f"unknown split tag(s) {bad}")
        for tag in ("train", "test"):
            if not np.any(self.split == tag):
                raise DataFormatError(f"split {tag!r} is empty")
        if self.task == "classification":
            if self.n_classes is None or self.n_classes < 1:
                raise DataFormatError("classification datasets need a positive n_classes")
            if np.any(self.labels < 0) or np.any(self.labels >= self.n_classes):
                raise DataFormatError(f"label out of range [0, {self.n_classes})")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    def rows(self, tag: str) -> np.ndarray:
        """Row indices carrying split ``tag``, ascending."""
        return np.flatnonzero(self.split == tag)


def load_dataset(manifest_path) -> Dataset:
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise FileNotFoundError(f"missing file: {manifest_path}")
    meta = json.loads(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent
    for key in ("features", "labels", "splits", "task"):
        if key not in meta:
            raise DataFormatError(f"{manifest_path}: manifest lacks key {key!r}")
    features = read_tmx(base / meta["features"])
    labels, label_task = read_labels(base / meta["labels"])
    split = read_splits(base / meta["splits"])
    if label_task != meta["task"]:
        raise DataFormatError(f"{manifest_path}: task {meta['task']!r} but label file is {label_task}")
    return Dataset(features, labels, split, meta["task"], meta.get("n_classes"))


def save_dataset(dataset: Dataset, directory, name="dataset") -> Path:
    """Write features/labels/splits plus a manifest; returns the manifest path."""
    directory = Path(directory)
    write_tmx(directory / f"{name}.features.tmx", dataset.features)
    write_labels(directory / f"{name}.labels.csv", dataset.labels)
    write_splits(directory / f"{name}.splits.csv", dataset.split)
    meta = {
        "features": f"{name}.features.tmx",
        "labels": f"{name}.labels.csv",
        "splits": f"{name}.splits.csv",
        "task": dataset.task,
        "n_classes": dataset.n_classes,
    }
    path = directory / f"{name}.json"
    atomic_write_text(path, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# regression bucketing
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BucketMap:
    """Three-way bucketing of each label dimension at -sigma / +sigma.

    Per dimension the ranges are (-inf, -sigma), [-sigma, +sigma] and
    (+sigma, inf), coded 0, 1, 2. Multi-dimensional labels get the
    base-3 number formed by the per-dimension codes, first dimension most
    significant.
    """

    sigma: np.ndarray
    bucket_ids: np.ndarray
    n_buckets: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_buckets", 3 ** len(self.sigma))

    def apply(self, labels) -> np.ndarray:
        return _bucket_codes(np.asarray(labels, dtype=np.float64), self.sigma)


def _bucket_codes(labels, sigma):
    lab = labels.reshape(len(labels), -1)
    codes = np.ones(lab.shape, dtype=np.int64)
    codes[lab < -sigma] = 0
    codes[lab > sigma] = 2
    ids = np.zeros(len(lab), dtype=np.int64)
    for j in range(lab.shape[1]):
        ids = ids * 3 + codes[:, j]
    return ids


def bucketize(labels, split) -> BucketMap:
    """Bucket continuous labels; sigma is the population std of train labels."""
    lab = np.asarray(labels, dtype=np.float64)
    lab = lab.reshape(len(lab), -1)
    split = np.asarray(split, dtype=object)
    train = lab[split == "train"]
    if len(train) == 0:
        raise DataFormatError("bucketize needs training rows")
    sigma = train.std(axis=0, ddof=0)
    for j, s in enumerate(sigma):
        if not s > 0:
            raise DataFormatError(f"label dimension {j} has zero spread on the training split")
    return BucketMap(sigma=_frozen(sigma), bucket_ids=_frozen(_bucket_codes(lab, sigma)))


def class_targets(dataset: Dataset) -> tuple[np.ndarray, int]:
    """Categorical targets for majority voting: labels, or buckets for regression."""
    if dataset.task == "classification":
        return np.asarray(dataset.labels), int(dataset.n_classes)
    bm = bucketize(dataset.labels, dataset.split)
    return np.asarray(bm.bucket_ids), bm.n_buckets
