"""Tabular datasets: CSV loading, seeded splits, PCA and min-max scaling."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ClassAbsentError,
    DataError,
    EmptyInputError,
    EmptyPartitionError,
    InsufficientSamplesError,
    MissingFileError,
    ParseError,
    RaggedRowError,
    UnknownColumnError,
)
from .seeding import derive_rng

CLASSIFICATION = "classification"
REGRESSION = "regression"
TASKS = (CLASSIFICATION, REGRESSION)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus one label column.

    Classification labels are integer codes ``0..n_classes-1``; ``classes``
    keeps the original label text in code order.
    """

    features: np.ndarray
    labels: np.ndarray
    task: str
    name: str = "dataset"
    classes: tuple = ()
    feature_names: tuple = ()
    label_name: str = "label"

    def __post_init__(self):
        if self.task not in TASKS:
            raise DataError(f"unknown task {self.task!r}")
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1:
            raise EmptyInputError("dataset needs at least one sample")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain non-finite values")
        if self.task == CLASSIFICATION:
            y = np.asarray(self.labels)
            if y.dtype.kind not in "iu":
                if not np.all(np.equal(np.mod(y, 1), 0)):
                    raise DataError("classification labels must be integer codes")
            y = y.astype(np.int64)
            if y.min() < 0:
                raise DataError("classification labels must be non-negative codes")
            classes = self.classes or tuple(str(c) for c in range(int(y.max()) + 1))
            object.__setattr__(self, "classes", tuple(classes))
        else:
            y = np.asarray(self.labels, dtype=float)
            if not np.all(np.isfinite(y)):
                raise DataError("regression labels contain non-finite values")
        if y.shape != (X.shape[0],):
            raise DataError(f"{X.shape[0]} feature rows but {y.shape} labels")
        if self.feature_names and len(self.feature_names) != X.shape[1]:
            raise DataError(f"{len(self.feature_names)} feature names for {X.shape[1]} columns")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y, y.dtype))

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def n_classes(self):
        return len(self.classes) if self.task == CLASSIFICATION else 0

    def __len__(self):
        return self.n_samples

    def subset(self, indices, name=None):
        idx = np.asarray(indices, dtype=np.int64)
        return replace(self, features=self.features[idx], labels=self.labels[idx], name=name or self.name)

    def concat(self, features, labels, name=None):
        """Return a new dataset with extra rows appended."""
        X = np.vstack([self.features, np.asarray(features, dtype=float).reshape(-1, self.n_features)])
        y = np.concatenate([self.labels, np.asarray(labels, dtype=self.labels.dtype)])
        return replace(self, features=X, labels=y, name=name or self.name)


def check_classes(ds: Dataset):
    """Raise unless a classification dataset has >= 2 classes present."""
    if ds.task != CLASSIFICATION:
        return
    present = np.unique(ds.labels)
    if present.size < 2:
        raise DataError("classification needs at least two classes")


def _parse_float(text, row, column):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(row, column, text) from None
    if not math.isfinite(v):
        raise ParseError(row, column, text)
    return v


def load_table(path, label=-1, task=CLASSIFICATION, header=True, name=None):
    """Read a CSV file into a :class:`Dataset`.

    Parameters
    ----------
    path : str or os.PathLike
    label : str or int
        Label column, by header name or by (possibly negative) index.
    task : {"classification", "regression"}
    header : bool
        Whether the first row holds column names.

    Rows are numbered from 1 in error messages, counting data rows only.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MissingFileError(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if header and rows:
        names, rows = [c.strip() for c in rows[0]], rows[1:]
    else:
        names = None
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")

    width = len(rows[0]) if names is None else len(names)
    if width < 2:
        raise DataError(f"{path}: need at least one feature and one label column")
    if isinstance(label, str) and not label.lstrip("-").isdigit():
        if names is None or label not in names:
            raise UnknownColumnError(label)
        li = names.index(label)
    else:
        li = int(label)
        if not -width <= li < width:
            raise UnknownColumnError(label)
        li %= width

    X = np.empty((len(rows), width - 1))
    raw_labels = []
    for r, cells in enumerate(rows, start=1):
        if len(cells) != width:
            raise RaggedRowError(r, width, len(cells))
        j = 0
        for c, text in enumerate(cells):
            if c == li:
                raw_labels.append(text.strip())
                continue
            X[r - 1, j] = _parse_float(text.strip(), r, names[c] if names else c)
            j += 1

    meta = ((tuple(n for c, n in enumerate(names) if c != li), names[li]) if names
            else ((), "label"))
    if task == CLASSIFICATION:
        codes = {}
        y = np.array([codes.setdefault(v, len(codes)) for v in raw_labels], dtype=np.int64)
        classes = tuple(codes)
        ds = Dataset(X, y, task, name or os.path.basename(path), classes, *meta)
        check_classes(ds)
        return ds
    y = np.array([_parse_float(v, r, names[li] if names else li)
                  for r, v in enumerate(raw_labels, start=1)])
    return Dataset(X, y, task, name or os.path.basename(path), (), *meta)


def save_table(ds: Dataset, path, extra_columns=None, label_name=None):
    """Write a dataset (and optional extra integer columns) as CSV with a header."""
    extra_columns = extra_columns or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        names = list(ds.feature_names) or [f"x{j}" for j in range(ds.n_features)]
        w.writerow(names + [label_name or ds.label_name] + list(extra_columns))
        for i in range(ds.n_samples):
            if ds.task == CLASSIFICATION:
                lab = ds.classes[int(ds.labels[i])]
            else:
                lab = repr(float(ds.labels[i]))
            row = [repr(float(v)) for v in ds.features[i]] + [lab]
            row += [int(col[i]) for col in extra_columns.values()]
            w.writerow(row)


# -- splitting ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SplitDataset:
    """Index lists into ``parent``. ``pool`` is train plus val."""

    parent: Dataset
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    seed: int = 0

    def __post_init__(self):
        for f in ("train_idx", "val_idx", "test_idx"):
            object.__setattr__(self, f, _frozen(getattr(self, f), np.int64))
        sets = [set(self.train_idx.tolist()), set(self.val_idx.tolist()), set(self.test_idx.tolist())]
        if any(a & b for a, b in ((sets[0], sets[1]), (sets[0], sets[2]), (sets[1], sets[2]))):
            raise DataError("split partitions overlap")

    @property
    def train(self):
        return self.parent.subset(self.train_idx, f"{self.parent.name}[train]")

    @property
    def val(self):
        return self.parent.subset(self.val_idx, f"{self.parent.name}[val]")

    @property
    def test(self):
        return self.parent.subset(self.test_idx, f"{self.parent.name}[test]")

    @property
    def pool_idx(self):
        return np.sort(np.concatenate([self.train_idx, self.val_idx]))

    @property
    def pool(self):
        return self.parent.subset(self.pool_idx, f"{self.parent.name}[pool]")

    @property
    def sizes(self):
        return {"n_train": len(self.train_idx), "n_val": len(self.val_idx),
                "n_test": len(self.test_idx), "n_pool": len(self.train_idx) + len(self.val_idx)}

    def to_manifest(self):
        return {"seed": int(self.seed), "train": self.train_idx.tolist(),
                "val": self.val_idx.tolist(), "test": self.test_idx.tolist()}

    def save_manifest(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_manifest(), fh, indent=2)

    @classmethod
    def from_manifest(cls, parent, manifest):
        return cls(parent, manifest["train"], manifest["val"], manifest["test"], manifest.get("seed", 0))


def _allocate(counts, total):
    """Largest-remainder allocation of ``total`` across groups proportional to ``counts``."""
    counts = np.asarray(counts)
    n = counts.sum()
    exact = counts * total / n
    base = np.floor(exact + 1e-9).astype(np.int64)
    rem = total - base.sum()
    order = np.argsort(-(exact - base), kind="stable")
    base[order[:rem]] += 1
    return base


def _stratified_take(rng, labels, indices, n_take, stratify):
    """Split ``indices`` into (taken, rest) with ``n_take`` taken."""
    if not stratify:
        perm = rng.permutation(indices)
        return np.sort(perm[:n_take]), np.sort(perm[n_take:])
    groups = [indices[labels[indices] == c] for c in np.unique(labels[indices])]
    alloc = _allocate([len(g) for g in groups], n_take)
    taken, rest = [], []
    for g, k in zip(groups, alloc):
        perm = rng.permutation(g)
        taken.append(perm[:k])
        rest.append(perm[k:])
    return np.sort(np.concatenate(taken)), np.sort(np.concatenate(rest))


def split(ds: Dataset, test_fraction=None, test: Dataset | None = None,
          val_ratio=(7, 2), seed=0) -> SplitDataset:
    """Seeded train/val/test split.

    Either ``test_fraction`` carves the test set out of ``ds`` or ``test`` supplies
    a separately acquired one (appended to the parent). The remaining pool is split
    train:val by ``val_ratio`` with ``floor(n * a / (a + b))`` training samples.
    Classification splits are stratified.
    """
    strat = ds.task == CLASSIFICATION
    rng = derive_rng(seed, "split")
    if test is not None:
        if test.n_features != ds.n_features or test.task != ds.task:
            raise DataError("test file does not match training file layout")
        if strat:
            test = _remap_classes(test, ds)
        parent = ds.concat(test.features, test.labels)
        pool = np.arange(ds.n_samples)
        test_idx = np.arange(ds.n_samples, parent.n_samples)
    else:
        parent = ds
        frac = 0.0 if test_fraction is None else float(test_fraction)
        if not 0.0 <= frac < 1.0:
            raise DataError(f"test fraction must lie in [0, 1), got {frac}")
        n_test = int(math.floor(ds.n_samples * frac + 1e-9))
        if n_test == 0:
            raise EmptyPartitionError("test partition is empty")
        test_idx, pool = _stratified_take(rng, ds.labels, np.arange(ds.n_samples), n_test, strat)
    if len(test_idx) == 0:
        raise EmptyPartitionError("test partition is empty")

    a, b = val_ratio
    n_train = (len(pool) * a) // (a + b)
    if n_train == 0 or n_train == len(pool):
        raise EmptyPartitionError(f"pool of {len(pool)} cannot be split {a}:{b}")
    train_idx, val_idx = _stratified_take(rng, parent.labels, pool, n_train, strat)

    y_tr = parent.labels[train_idx]
    if strat:
        counts = np.bincount(y_tr, minlength=parent.n_classes)
        present = np.unique(parent.labels[pool])
        missing = [int(c) for c in present if counts[c] == 0]
        if missing:
            raise ClassAbsentError(f"classes {missing} absent from the training partition")
        if counts[present].min() < 2:
            raise InsufficientSamplesError("every class needs at least 2 training samples")
    elif len(train_idx) < 4:
        raise InsufficientSamplesError("regression needs at least 4 training samples")
    return SplitDataset(parent, train_idx, val_idx, test_idx, seed)


def _remap_classes(test: Dataset, ref: Dataset):
    lookup = {c: i for i, c in enumerate(ref.classes)}
    unknown = [c for c in test.classes if c not in lookup]
    if unknown:
        raise ClassAbsentError(f"test classes {unknown} not present in training data")
    codes = np.array([lookup[test.classes[v]] for v in test.labels], dtype=np.int64)
    return Dataset(test.features, codes, test.task, test.name, ref.classes)


# -- PCA / scaling -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray
    eigenvalues: np.ndarray = field(default=None)

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) @ self.components.T


def fit_pca(X, q) -> PcaModel:
    """Top-``q`` principal axes of the sample covariance.

    Components are sorted by decreasing eigenvalue and signed so that the
    largest-magnitude entry of each one is positive.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if n < 2:
        raise InsufficientSamplesError("PCA needs at least 2 samples")
    if not 1 <= q <= min(n, d):
        raise DataError(f"q={q} outside [1, {min(n, d)}]")
    mean = X.mean(axis=0)
    cov = np.cov(X - mean, rowvar=False, ddof=1).reshape(d, d)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    comps = evecs[:, order].T[:q].copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    total = evals.sum()
    ratio = evals[:q] / total if total > 0 else np.zeros(q)
    return PcaModel(_frozen(mean), _frozen(comps), _frozen(ratio), _frozen(evals[:q]))


def minmax_normalize(X, reference=None):
    """Scale each column to [0, 1]; constant columns map to 0.

    With ``reference`` given, the column ranges come from it instead of ``X``.
    """
    X = np.asarray(X, dtype=float)
    ref = X if reference is None else np.asarray(reference, dtype=float)
    lo = ref.min(axis=0)
    span = ref.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (X - lo) / safe, 0.0)
    if reference is not None:
        out = np.clip(out, 0.0, 1.0)
    return out
