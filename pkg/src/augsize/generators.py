"""Augmentation generators.

Transform strategies (jitter, scale, warp, interpolate) perturb existing rows and
keep a pointer to their source row. The class-conditional samplers stand in for
generative models and draw fresh rows per class.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .dataset import CLASSIFICATION, Dataset
from .errors import DataError, InsufficientSamplesError, MissingFileError, ParseError
from .infotheory import KsgConfig, RhoConfig, conditional_entropy_binned, estimate_rho, pair_samples
from .seeding import derive_rng, derive_seed

TRANSFORMS = ("jitter", "scale", "warp", "interpolate")
SAMPLERS = ("class-gaussian", "class-kde")
KINDS = TRANSFORMS + SAMPLERS + ("external",)

DEFAULT_PARAMS = {
    "jitter": {"sigma": 0.05},
    "scale": {"s": 0.1},
    "warp": {"sigma": 0.2, "knots": 4},
    "interpolate": {},
    "class-gaussian": {"ridge": 1e-6},
    "class-kde": {"bw_scale": 1.0},
    "external": {},
}


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: dict = field(default_factory=dict)
    param_count: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown generator kind {self.kind!r}")
        merged = {**DEFAULT_PARAMS[self.kind], **self.params}
        object.__setattr__(self, "params", merged)
        if self.param_count is not None and self.param_count < 0:
            raise DataError("param_count must be >= 0")
        p = merged
        if self.kind == "jitter" and p["sigma"] < 0:
            raise DataError("jitter sigma must be >= 0")
        if self.kind == "scale" and not 0 <= p["s"] < 1:
            raise DataError("scale s must lie in [0, 1)")
        if self.kind == "warp" and (p["sigma"] < 0 or int(p["knots"]) < 1):
            raise DataError("warp needs sigma >= 0 and knots >= 1")
        if self.kind == "interpolate" and "weight" in p and not 0 <= p["weight"] <= 1:
            raise DataError("interpolation weight must lie in [0, 1]")
        if self.kind == "class-gaussian" and p["ridge"] < 0:
            raise DataError("ridge must be >= 0")
        if self.kind == "class-kde" and p["bw_scale"] < 0:
            raise DataError("bw_scale must be >= 0")

    @property
    def extended(self):
        return self.kind in SAMPLERS or self.kind == "external"


@dataclass(frozen=True, eq=False)
class AugmentedSet:
    features: np.ndarray
    labels: np.ndarray
    source_index: np.ndarray
    spec: GeneratorSpec

    def __len__(self):
        return self.features.shape[0]

    def as_dataset(self, like: Dataset, name="augmented"):
        return Dataset(self.features, self.labels, like.task, name, like.classes,
                       like.feature_names, like.label_name)


def _empty(train, spec):
    return AugmentedSet(np.empty((0, train.n_features)), train.labels[:0].copy(),
                        np.empty(0, dtype=np.int64), spec)


def _warp_rows(rows, rng, sigma, knots):
    n, d = rows.shape
    if d < 2:
        return rows.copy()
    grid = np.arange(d, dtype=float)
    anchors = np.linspace(0, d - 1, knots + 2)
    out = np.empty_like(rows)
    for i in range(n):
        speed = CubicSpline(anchors, rng.normal(1.0, sigma, size=knots + 2))(grid)
        t = np.cumsum(np.clip(speed, 1e-3, None))
        t = (t - t[0]) / (t[-1] - t[0]) * (d - 1)
        out[i] = np.interp(grid, t, rows[i])
    return out


def transform_augment(train: Dataset, spec: GeneratorSpec, n, seed=None) -> AugmentedSet:
    """Generate ``n`` rows by perturbing uniformly chosen source rows of ``train``."""
    if spec.kind not in TRANSFORMS:
        raise DataError(f"{spec.kind!r} is not a transform strategy")
    if n < 0:
        raise DataError("n must be >= 0")
    if n == 0:
        return _empty(train, spec)
    if train.n_samples == 0:
        raise InsufficientSamplesError("cannot augment an empty training set")
    rng = derive_rng(spec.seed if seed is None else seed, "augment")
    X, y = train.features, train.labels
    src = rng.integers(0, train.n_samples, size=n)
    rows = X[src]
    labels = y[src].copy()
    p = spec.params
    if spec.kind == "jitter":
        feats = rows + rng.standard_normal(rows.shape) * (p["sigma"] * X.std(axis=0))
    elif spec.kind == "scale":
        feats = rows * rng.uniform(1 - p["s"], 1 + p["s"], size=(n, 1))
    elif spec.kind == "warp":
        feats = _warp_rows(rows, rng, p["sigma"], int(p["knots"]))
    else:
        partner = np.empty(n, dtype=np.int64)
        if train.task == CLASSIFICATION:
            for c in np.unique(labels):
                at = np.flatnonzero(labels == c)
                pool = np.flatnonzero(y == c)
                partner[at] = pool[rng.integers(0, pool.size, size=at.size)]
        else:
            partner = rng.integers(0, train.n_samples, size=n)
        if "weight" in p:
            w = np.full(n, float(p["weight"]))
        else:
            w = rng.uniform(0.0, 1.0, size=n)
        feats = w[:, None] * rows + (1 - w[:, None]) * X[partner]
        if train.task != CLASSIFICATION:
            labels = w * labels + (1 - w) * y[partner]
    return AugmentedSet(np.asarray(feats, dtype=float), labels, src.astype(np.int64), spec)


def _per_class_counts(n_per_class, n_classes):
    if np.isscalar(n_per_class):
        return np.full(n_classes, int(n_per_class))
    counts = np.asarray(n_per_class, dtype=np.int64)
    if counts.shape != (n_classes,):
        raise DataError("n_per_class needs one entry per class")
    return counts


def surrogate_sample(train: Dataset, spec: GeneratorSpec, n_per_class, seed=None) -> AugmentedSet:
    """Draw new rows per class from a fitted Gaussian or a Silverman-bandwidth KDE.

    The returned spec carries the fitted parameter count as ``param_count``.
    """
    if spec.kind not in SAMPLERS:
        raise DataError(f"{spec.kind!r} is not a class-conditional sampler")
    if train.task != CLASSIFICATION:
        raise DataError("class-conditional sampling needs a classification dataset")
    counts = _per_class_counts(n_per_class, train.n_classes)
    d = train.n_features
    rng = derive_rng(spec.seed if seed is None else seed, "surrogate")
    feats, labels = [], []
    fitted = 0
    for c in range(train.n_classes):
        Xc = train.features[train.labels == c]
        if Xc.shape[0] == 0:
            continue
        if Xc.shape[0] < 2:
            raise InsufficientSamplesError(f"class {train.classes[c]!r} has fewer than 2 samples")
        if spec.kind == "class-gaussian":
            mu = Xc.mean(axis=0)
            cov = np.cov(Xc, rowvar=False).reshape(d, d) + spec.params["ridge"] * np.eye(d)
            fitted += d + d * (d + 1) // 2
            if counts[c]:
                try:
                    L = np.linalg.cholesky(cov)
                except np.linalg.LinAlgError:
                    raise DataError(f"class {train.classes[c]!r}: singular covariance") from None
                feats.append(mu + rng.standard_normal((counts[c], d)) @ L.T)
        else:
            n_c = Xc.shape[0]
            bw = spec.params["bw_scale"] * (4.0 / (d + 2)) ** (1.0 / (d + 4)) * n_c ** (-1.0 / (d + 4))
            scale = bw * Xc.std(axis=0, ddof=1)
            fitted += d + n_c * d
            if counts[c]:
                pick = rng.integers(0, n_c, size=counts[c])
                feats.append(Xc[pick] + rng.standard_normal((counts[c], d)) * scale)
        if counts[c]:
            labels.append(np.full(counts[c], c, dtype=np.int64))
    out_spec = replace(spec, param_count=fitted if spec.param_count is None else spec.param_count)
    if not feats:
        return _empty(train, out_spec)
    X = np.vstack(feats)
    return AugmentedSet(X, np.concatenate(labels), np.full(X.shape[0], -1, dtype=np.int64), out_spec)


def augment(train: Dataset, spec: GeneratorSpec, n, seed=None) -> AugmentedSet:
    """``n`` rows from any built-in generator; samplers split ``n`` across classes by prior."""
    if spec.kind in TRANSFORMS:
        return transform_augment(train, spec, n, seed)
    if spec.kind in SAMPLERS:
        prior = np.bincount(train.labels, minlength=train.n_classes)
        exact = prior * n / prior.sum()
        counts = np.floor(exact).astype(np.int64)
        counts[np.argsort(-(exact - counts), kind="stable")[: n - counts.sum()]] += 1
        return surrogate_sample(train, spec, counts, seed)
    raise DataError("external generators supply data through read_augmented")


RHO_OVERSAMPLE = 10

_KNOBS = {"jitter": 1, "scale": 1, "warp": 2, "interpolate": 0, "class-gaussian": 1, "class-kde": 1}


def generator_complexity(spec: GeneratorSpec, tau=1e6):
    """Return ``(K, xi)`` with ``xi = exp(-K / tau)``.

    ``K`` is the declared or fitted parameter count, else the number of scalar
    knobs of a built-in strategy.
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    if spec.param_count is not None:
        K = int(spec.param_count)
    elif spec.kind == "external":
        raise DataError("external generators must declare a parameter count")
    else:
        K = _KNOBS[spec.kind]
    return K, math.exp(-K / tau)


def draw_rows(train: Dataset, generator, augmented, n, seed) -> AugmentedSet:
    """``n`` rows from a built-in generator, or resampled from an external generated set."""
    if generator is not None and generator.kind != "external":
        return augment(train, generator, n, seed=seed)
    rng = derive_rng(seed, "external-pick")
    m = len(augmented)
    if m == 0:
        raise DataError("external generated set is empty")
    pick = rng.choice(m, size=n, replace=n > m)
    return AugmentedSet(augmented.features[pick], augmented.labels[pick],
                        augmented.source_index[pick], augmented.spec)


def generator_rho(pool: Dataset, generator, augmented=None, cfg_rho=None, ksg=None, seed=0, n_rows=None):
    """Estimate the contribution ratio of ``generator`` (or given ``augmented`` rows) on ``pool``.

    For transforms ``n_rows`` defaults to ``RHO_OVERSAMPLE`` times the pool size:
    per-band KSG estimates on a handful of pairs are biased towards zero
    dependence. Samplers default to one row per real row, since nearest-neighbour
    pairing gains dependence as the generated density grows.
    """
    cfg_rho = cfg_rho or RhoConfig()
    ksg = ksg or KsgConfig()
    if augmented is None:
        mult = RHO_OVERSAMPLE if generator.kind in TRANSFORMS else 1
        n_rows = n_rows or mult * pool.n_samples
        augmented = augment(pool, generator, n_rows, seed=derive_seed(seed, "rho-gen"))
    gen_spec = augmented.spec
    xr, xg, y = pair_samples(pool.features, pool.labels, augmented.features, augmented.labels,
                             augmented.source_index, cfg_rho.pairing)
    h = conditional_entropy_binned(pool.features, pool.labels, cfg_rho)
    return estimate_rho(xr, xg, y, gen_spec, cfg_rho, ksg, derive_seed(seed, "rho"), h_cond=h)


# -- CSV exchange ------------------------------------------------------------

def write_augmented(aug: AugmentedSet, like: Dataset, path):
    from .dataset import save_table

    save_table(aug.as_dataset(like), path, {"source_index": aug.source_index})


def read_augmented(path, like: Dataset, label=-1, param_count=None, seed=0) -> AugmentedSet:
    """Read externally generated rows.

    The layout matches the real data: features plus one label column, with an
    optional ``source_index`` column (header required to name it).
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MissingFileError(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty")
    header = [c.strip() for c in rows[0]]
    has_header = not _numeric_row(header, skip=label)
    body = rows[1:] if has_header else rows
    width = len(rows[0])
    src_col = header.index("source_index") if has_header and "source_index" in header else None
    if isinstance(label, str) and not label.lstrip("-").isdigit():
        if not has_header or label not in header:
            raise DataError(f"unknown label column {label!r}")
        li = header.index(label)
    else:
        li = int(label) % width
        if src_col is not None and int(label) < 0 and li == src_col:
            li = (src_col - 1) % width
    feat_cols = [c for c in range(width) if c not in (li, src_col)]
    if len(feat_cols) != like.n_features:
        raise DataError(f"{path}: {len(feat_cols)} features, expected {like.n_features}")
    X = np.empty((len(body), len(feat_cols)))
    labels, src = [], []
    lookup = {c: i for i, c in enumerate(like.classes)}
    for r, cells in enumerate(body, start=1):
        for j, c in enumerate(feat_cols):
            try:
                X[r - 1, j] = float(cells[c])
            except (ValueError, IndexError):
                raise ParseError(r, c, cells[c] if c < len(cells) else "") from None
        text = cells[li].strip()
        if like.task == CLASSIFICATION:
            if text not in lookup:
                raise DataError(f"row {r}: label {text!r} not among the real classes")
            labels.append(lookup[text])
        else:
            labels.append(float(text))
        src.append(int(cells[src_col]) if src_col is not None else -1)
    y = np.array(labels, dtype=np.int64 if like.task == CLASSIFICATION else float)
    spec = GeneratorSpec("external", param_count=param_count, seed=seed)
    return AugmentedSet(X, y, np.array(src, dtype=np.int64), spec)


def _numeric_row(cells, skip):
    for i, c in enumerate(cells):
        try:
            float(c)
        except ValueError:
            if isinstance(skip, int) and i == skip % len(cells):
                continue
            return False
    return True
