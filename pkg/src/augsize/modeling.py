"""Baseline models and their complexity probes.

Models are small numpy networks (zero hidden layers for the linear kinds)
trained with Adam and early stopping on validation loss. Probes:

* test error / regression metrics,
* empirical Rademacher complexity (closed form for norm-bounded linear
  functions, sign-fitting for MLPs),
* PAC-Bayes KL complexity from a Gaussian posterior over the parameters,
* spectral complexity (product of per-layer spectral norms).
"""
from __future__ import annotations

import itertools
import json
import math
import os
import warnings
import zlib
from collections import deque
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dataset import CLASSIFICATION, REGRESSION, Dataset, SplitDataset
from .errors import (
    DataError,
    DivergenceError,
    InconsistentKappaError,
    MissingFieldError,
    MissingFileError,
    NumericalError,
    SchemaError,
)
from .seeding import derive_rng, derive_seed

KINDS = ("linear-logistic", "linear-regressor", "ridge", "mlp")
SIGMA_FLOOR = 1e-6
MAPE_FLOOR = 1e-12
PROBES_SCHEMA = 1


class ModelWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "mlp"
    hidden: tuple = (32,)
    lr: float = 1e-2
    max_epochs: int = 300
    patience: int = 20
    l2: float = 0.0
    batch_size: int | None = None  # None -> full batch
    norm_bound: float = 1.0
    standardize: bool = True
    trace_keep: int = 50
    rademacher_epochs: int = 150
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.kind == "ridge" and self.l2 == 0.0:
            object.__setattr__(self, "l2", 1e-2)
        if any(h < 1 for h in self.hidden):
            raise DataError("hidden sizes must be >= 1")
        if self.lr <= 0 or self.patience < 1 or self.max_epochs < 1:
            raise DataError("need lr > 0, patience >= 1, max_epochs >= 1")
        unknown = set(self.grid) - {f for f in self.__dataclass_fields__ if f != "grid"}
        if unknown:
            raise DataError(f"grid names unknown hyperparameters {sorted(unknown)}")

    @property
    def layer_sizes(self):
        return self.hidden if self.kind == "mlp" else ()

    def loss_for(self, task):
        return "cross-entropy" if task == CLASSIFICATION else "mse"

    def check_task(self, task):
        if self.kind == "linear-logistic" and task != CLASSIFICATION:
            raise DataError("linear-logistic needs a classification task")
        if self.kind in ("linear-regressor", "ridge") and task != REGRESSION:
            raise DataError(f"{self.kind} needs a regression task")


@dataclass(frozen=True, eq=False)
class TrainingTrace:
    val_loss: tuple
    snapshots: np.ndarray  # (n_kept, n_params), most recent epochs
    best_epoch: int
    epochs_run: int


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ModelSpec
    task: str
    n_outputs: int
    layers: tuple  # ((W, b), ...)
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    trace: TrainingTrace
    seed: int
    grid_choice: dict = field(default_factory=dict)

    @property
    def params(self):
        return _flatten(self.layers)

    @property
    def param_count(self):
        return int(sum(W.size + b.size for W, b in self.layers))

    def decision(self, X):
        Z = (np.asarray(X, dtype=float) - self.x_mean) / self.x_scale
        return _forward(self.layers, Z)[-1]

    def predict(self, X):
        out = self.decision(X)
        if self.task == CLASSIFICATION:
            return np.argmax(out, axis=1)
        return out[:, 0] * self.y_scale + self.y_mean


# -- network plumbing --------------------------------------------------------

def _init_layers(sizes, rng):
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        W = rng.standard_normal((fan_in, fan_out)) * math.sqrt(2.0 / fan_in)
        layers.append((W, np.zeros(fan_out)))
    return layers


def _forward(layers, X):
    acts = [X]
    h = X
    for i, (W, b) in enumerate(layers):
        h = h @ W + b
        if i < len(layers) - 1:
            h = np.maximum(h, 0.0)
        acts.append(h)
    return acts


def _backward(layers, acts, grad_out, l2):
    grads = []
    g = grad_out
    for i in range(len(layers) - 1, -1, -1):
        W, _ = layers[i]
        grads.append((acts[i].T @ g + l2 * W, g.sum(axis=0)))
        if i:
            g = (g @ W.T) * (acts[i] > 0)
    return grads[::-1]


def _flatten(layers):
    if not layers:
        return np.empty(0)
    return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in layers])


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _loss_and_grad(layers, X, T, task, l2, need_grad=True):
    """Mean loss (+ L2 penalty) and its gradient. ``T`` is one-hot or a column."""
    acts = _forward(layers, X)
    out = acts[-1]
    n = X.shape[0]
    if task == CLASSIFICATION:
        P = _softmax(out)
        loss = -np.sum(T * np.log(np.clip(P, 1e-300, None))) / n
        g = (P - T) / n
    else:
        r = out - T
        loss = float(np.mean(r ** 2))
        g = 2.0 * r / n
    loss += 0.5 * l2 * sum(float(np.sum(W * W)) for W, _ in layers)
    if not need_grad:
        return loss, None
    return loss, _backward(layers, acts, g, l2)


class _Adam:
    def __init__(self, layers, lr, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in layers]
        self.v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in layers]
        self.t = 0

    def step(self, layers, grads):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        new = []
        for i, ((W, b), (gW, gb)) in enumerate(zip(layers, grads)):
            upd = []
            for j, (p, g) in enumerate(((W, gW), (b, gb))):
                m = self.b1 * self.m[i][j] + (1 - self.b1) * g
                v = self.b2 * self.v[i][j] + (1 - self.b2) * g * g
                self.m[i] = (m, self.m[i][1]) if j == 0 else (self.m[i][0], m)
                self.v[i] = (v, self.v[i][1]) if j == 0 else (self.v[i][0], v)
                upd.append(p - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps))
            new.append(tuple(upd))
        return new


def _targets(y, task, n_classes, y_mean=0.0, y_scale=1.0):
    if task == CLASSIFICATION:
        T = np.zeros((len(y), n_classes))
        T[np.arange(len(y)), y] = 1.0
        return T
    return ((np.asarray(y, dtype=float) - y_mean) / y_scale)[:, None]


def _fit_one(spec, train, val, seed):
    task = train.task
    spec.check_task(task)
    n_out = train.n_classes if task == CLASSIFICATION else 1
    X = train.features
    if spec.standardize:
        mu, sd = X.mean(axis=0), X.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
    else:
        mu, sd = np.zeros(X.shape[1]), np.ones(X.shape[1])
    if task == REGRESSION and spec.standardize:
        ym, ys = float(train.labels.mean()), float(train.labels.std()) or 1.0
    else:
        ym, ys = 0.0, 1.0
    Xtr, Xva = (X - mu) / sd, (val.features - mu) / sd
    Ttr = _targets(train.labels, task, n_out, ym, ys)
    Tva = _targets(val.labels, task, n_out, ym, ys)

    rng = derive_rng(seed, "fit")
    layers = _init_layers((X.shape[1],) + spec.layer_sizes + (n_out,), rng)
    opt = _Adam(layers, spec.lr)
    best = (math.inf, layers, 0)
    val_hist = []
    snaps = deque(maxlen=spec.trace_keep)
    bs = spec.batch_size or Xtr.shape[0]
    since = 0
    for epoch in range(1, spec.max_epochs + 1):
        order = rng.permutation(Xtr.shape[0]) if bs < Xtr.shape[0] else np.arange(Xtr.shape[0])
        for start in range(0, len(order), bs):
            rows = order[start:start + bs]
            loss, grads = _loss_and_grad(layers, Xtr[rows], Ttr[rows], task, spec.l2)
            if not math.isfinite(loss):
                raise DivergenceError(epoch)
            layers = opt.step(layers, grads)
        vloss, _ = _loss_and_grad(layers, Xva, Tva, task, 0.0, need_grad=False)
        if not math.isfinite(vloss):
            raise DivergenceError(epoch, "non-finite validation loss")
        val_hist.append(vloss)
        snaps.append(_flatten(layers))
        if vloss < best[0]:
            best = (vloss, layers, epoch)
            since = 0
        else:
            since += 1
            if since >= spec.patience:
                break
    trace = TrainingTrace(tuple(val_hist), np.array(snaps), best[2], len(val_hist))
    return TrainedModel(spec, task, n_out, tuple(best[1]), mu, sd, ym, ys, trace, seed), best[0]


def fit(spec: ModelSpec, split: SplitDataset, seed=0) -> TrainedModel:
    """Train on ``split.train`` with early stopping on ``split.val``.

    A non-empty ``spec.grid`` is searched exhaustively; the cell with the lowest
    best validation loss wins (first cell on ties) and is recorded in
    ``grid_choice``.
    """
    train, val = split.train, split.val
    if train.n_samples == 0 or val.n_samples == 0:
        raise DataError("fit needs non-empty train and validation sets")
    if not spec.grid:
        return _fit_one(spec, train, val, seed)[0]
    names = sorted(spec.grid)
    best = None
    for cell in itertools.product(*(spec.grid[k] for k in names)):
        choice = dict(zip(names, cell))
        model, vloss = _fit_one(replace(spec, grid={}, **choice), train, val, seed)
        if best is None or vloss < best[1]:
            best = (replace(model, grid_choice=choice), vloss)
    return best[0]


def fit_dataset(spec, train: Dataset, val: Dataset, seed=0):
    """Like :func:`fit` for explicit train/validation datasets (no grid search)."""
    return _fit_one(replace(spec, grid={}), train, val, seed)[0]


# -- test metrics ------------------------------------------------------------

@dataclass(frozen=True)
class RegressionMetrics:
    mape: float
    rmse: float
    mse: float


def error_rate(y_true, y_pred):
    return float(np.mean(np.asarray(y_true) != np.asarray(y_pred)))


def macro_f1(y_true, y_pred):
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    scores = []
    for c in np.unique(y_true):
        tp = np.sum((y_pred == c) & (y_true == c))
        denom = np.sum(y_pred == c) + np.sum(y_true == c)
        scores.append(2.0 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def regression_metrics(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=float)
    r = np.asarray(y_pred, dtype=float) - y_true
    mse = float(np.mean(r ** 2))
    mape = float(np.mean(np.abs(r) / np.maximum(np.abs(y_true), MAPE_FLOOR)))
    return RegressionMetrics(mape, math.sqrt(mse), mse)


def test_error(model: TrainedModel, test: Dataset):
    """1 - accuracy for classifiers, :class:`RegressionMetrics` for regressors."""
    if test.n_samples == 0:
        raise DataError("empty test set")
    if test.task != model.task:
        raise DataError(f"{model.task} model evaluated on a {test.task} set")
    if test.n_features != model.x_mean.shape[0]:
        raise DataError("test features do not match the model input width")
    if model.task == CLASSIFICATION:
        if test.labels.max() >= model.n_outputs:
            raise DataError("test labels exceed the model's class count")
        return error_rate(test.labels, model.predict(test.features))
    return regression_metrics(test.labels, model.predict(test.features))


test_error.__test__ = False  # not a pytest test when imported into test modules


# -- Rademacher complexity ---------------------------------------------------

@dataclass(frozen=True)
class RademacherResult:
    mean: float
    replicates: tuple
    method: str
    failed: int = 0


def rademacher_from_sup(sup, X, M=20, seed=0, method="custom"):
    """Average ``sup(sigma, X)`` over ``M`` Rademacher sign vectors."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2 or M < 2:
        raise DataError("need n >= 2 and M >= 2")
    reps, failed = [], 0
    for j in range(M):
        sigma = derive_rng(seed, "rademacher", j).choice((-1.0, 1.0), size=n)
        try:
            v = float(sup(sigma, X))
        except NumericalError:
            v = math.nan
        if math.isfinite(v):
            reps.append(v)
        else:
            failed += 1
    if failed * 2 >= M:
        raise NumericalError(f"{failed} of {M} Rademacher replicates failed")
    return RademacherResult(float(np.mean(reps)), tuple(reps), method, failed)


def _standardized(X):
    sd = X.std(axis=0)
    return (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)


def linear_sup(bound):
    """Exact sup of (1/n) sum sigma_i <w, x_i> over ||w||_2 <= bound."""
    return lambda sigma, X: bound * np.linalg.norm(sigma @ X) / X.shape[0]


def linear_sup_trained(bound, steps=200, lr=0.5):
    """Projected gradient ascent over the same norm ball (training-based route)."""
    def sup(sigma, X):
        n = X.shape[0]
        g = sigma @ X / n
        w = np.zeros(X.shape[1])
        for _ in range(steps):
            w = w + lr * g
            norm = np.linalg.norm(w)
            if norm > bound:
                w *= bound / norm
        return float(np.mean(sigma * (X @ w)))
    return sup


def mlp_sup(spec: ModelSpec, seed):
    """Fit an MLP to the signs, then score mean(sigma * clip(f, -1, 1))."""
    def sup(sigma, X):
        rng = derive_rng(seed, "rademacher-mlp", zlib.crc32(sigma.tobytes()))
        layers = _init_layers((X.shape[1],) + spec.hidden + (1,), rng)
        opt = _Adam(layers, spec.lr)
        T = sigma[:, None]
        for epoch in range(1, spec.rademacher_epochs + 1):
            loss, grads = _loss_and_grad(layers, X, T, REGRESSION, spec.l2)
            if not math.isfinite(loss):
                raise DivergenceError(epoch)
            layers = opt.step(layers, grads)
        f = np.clip(_forward(layers, X)[-1][:, 0], -1.0, 1.0)
        return float(np.mean(sigma * f))
    return sup


def empirical_rademacher(spec, X, M=20, seed=0, method=None) -> RademacherResult:
    """Empirical Rademacher complexity of the model family on ``X``.

    ``spec`` is a :class:`ModelSpec` or a callable ``sup(sigma, X)``. Linear
    kinds default to the closed form ``B ||sum sigma_i x_i|| / n``; ``method="train"``
    uses projected gradient ascent instead. MLPs are always trained.
    """
    X = np.asarray(X, dtype=float)
    if callable(spec):
        return rademacher_from_sup(spec, X, M, seed)
    if spec.standardize:
        X = _standardized(X)
    if spec.kind == "mlp":
        return rademacher_from_sup(mlp_sup(spec, seed), X, M, seed, "mlp-train")
    method = method or "closed"
    if method == "closed":
        return rademacher_from_sup(linear_sup(spec.norm_bound), X, M, seed, "linear-closed")
    if method == "train":
        return rademacher_from_sup(linear_sup_trained(spec.norm_bound), X, M, seed, "linear-train")
    raise ValueError(f"unknown method {method!r}")


def scale_complexity(rademacher, n_train):
    """kappa_emp = R * sqrt(n)."""
    return rademacher * math.sqrt(n_train)


# -- PAC-Bayes ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PacBayesPosterior:
    means: np.ndarray
    stds: np.ndarray
    sigma_p: float = 1.0

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float).ravel()
        stds = np.maximum(np.asarray(self.stds, dtype=float).ravel(), SIGMA_FLOOR)
        if means.shape != stds.shape:
            raise DataError("means and stds differ in length")
        if self.sigma_p <= 0:
            raise DataError("prior std must be > 0")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)


def posterior_from_snapshots(snapshots, final=None, window=20, sigma_p=1.0):
    """Gaussian posterior: mean = ``final`` (default last snapshot), std over the last ``window``."""
    snaps = np.atleast_2d(np.asarray(snapshots, dtype=float))
    if snaps.shape[0] < 2:
        raise DataError("need at least 2 parameter snapshots")
    if window > snaps.shape[0]:
        warnings.warn(f"window {window} exceeds the {snaps.shape[0]} recorded snapshots; using all",
                      ModelWarning)
        window = snaps.shape[0]
    tail = snaps[-window:]
    means = tail[-1] if final is None else np.asarray(final, dtype=float)
    return PacBayesPosterior(means, tail.std(axis=0), sigma_p)


def collect_posterior(model: TrainedModel, window=20, sigma_p=1.0) -> PacBayesPosterior:
    return posterior_from_snapshots(model.trace.snapshots, model.params, window, sigma_p)


def pac_bayes_complexity(post: PacBayesPosterior):
    """KL(Q || P) for diagonal Gaussians Q = N(w, sigma_q^2), P = N(0, sigma_p^2)."""
    sq, sp, w = post.stds, post.sigma_p, post.means
    return float(np.sum(np.log(sp / sq) + (sq ** 2 + w ** 2) / (2 * sp ** 2) - 0.5))


# -- spectral complexity -----------------------------------------------------

def spectral_norm_product(weights):
    out = 1.0
    for W in weights:
        W = np.atleast_2d(np.asarray(W, dtype=float))
        out *= float(np.linalg.norm(W, 2)) if W.size else 0.0
    return out


def spectral_complexity(model: TrainedModel):
    return spectral_norm_product([W for W, _ in model.layers])


# -- probes ------------------------------------------------------------------

@dataclass
class ModelProbes:
    task: str
    n_train: int
    test_error: float | None = None
    mape: float | None = None
    rmse: float | None = None
    mse: float | None = None
    rademacher: float | None = None
    rademacher_replicates: tuple = ()
    rademacher_method: str = ""
    kappa_emp: float | None = None
    pac_bayes: float | None = None
    spectral: float | None = None
    param_count: int | None = None
    loss: str = ""
    error_repeats: tuple = ()

    def __post_init__(self):
        if self.rademacher is not None and self.kappa_emp is None:
            self.kappa_emp = scale_complexity(self.rademacher, self.n_train)

    def to_dict(self):
        d = asdict(self)
        d["schema"] = PROBES_SCHEMA
        return d


def _require(doc, key):
    if key not in doc or doc[key] is None:
        raise MissingFieldError(key)
    return doc[key]


def parse_probes(doc) -> ModelProbes:
    """Validate a probes mapping (schema 1)."""
    if not isinstance(doc, dict):
        raise SchemaError("probes document must be a JSON object")
    if doc.get("schema", PROBES_SCHEMA) != PROBES_SCHEMA:
        raise SchemaError(f"unsupported probes schema {doc.get('schema')!r}")
    task = doc.get("task")
    if task is None:
        task = CLASSIFICATION if "test_error" in doc else REGRESSION
    if task not in (CLASSIFICATION, REGRESSION):
        raise SchemaError(f"unknown task {task!r}")
    n_train = int(_require(doc, "n_train"))
    if n_train < 1:
        raise SchemaError("n_train must be >= 1")
    rad = doc.get("rademacher")
    r_mean, reps = None, ()
    if rad is not None:
        if isinstance(rad, dict):
            r_mean = float(_require(rad, "mean"))
            reps = tuple(float(v) for v in rad.get("replicates", ()))
        else:
            r_mean = float(rad)
    if task == CLASSIFICATION:
        err = float(_require(doc, "test_error"))
        if not 0 <= err <= 1:
            raise SchemaError("test_error must lie in [0, 1]")
        if r_mean is None:
            raise MissingFieldError("rademacher")
    else:
        _require(doc, "mape")
        _require(doc, "pac_bayes")
        _require(doc, "param_count")
    kappa = doc.get("kappa_emp", doc.get("kappa"))
    if kappa is not None and r_mean is not None:
        expect = scale_complexity(r_mean, n_train)
        if abs(float(kappa) - expect) > 1e-6:
            raise InconsistentKappaError(f"kappa_emp {kappa} != R * sqrt(n) = {expect:.9g}")
    for key in ("pac_bayes", "spectral"):
        if doc.get(key) is not None and float(doc[key]) < 0:
            raise SchemaError(f"{key} must be >= 0")

    def opt(key):
        return None if doc.get(key) is None else float(doc[key])

    return ModelProbes(
        task=task, n_train=n_train, test_error=opt("test_error"), mape=opt("mape"),
        rmse=opt("rmse"), mse=opt("mse"), rademacher=r_mean, rademacher_replicates=reps,
        rademacher_method="imported", pac_bayes=opt("pac_bayes"), spectral=opt("spectral"),
        param_count=None if doc.get("param_count") is None else int(doc["param_count"]),
        loss=doc.get("loss", "cross-entropy" if task == CLASSIFICATION else "mse"),
        error_repeats=tuple(float(v) for v in doc.get("error_repeats", ())),
    )


def import_probes(path) -> ModelProbes:
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MissingFileError(path)
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return parse_probes(doc)


def probe_model(model: TrainedModel, split: SplitDataset, M=20, seed=0, window=20, sigma_p=1.0,
                rademacher=True, pac_bayes=True) -> ModelProbes:
    """Compute every probe for a trained model; Rademacher runs on the training pool."""
    pool = split.pool
    probes = ModelProbes(task=model.task, n_train=pool.n_samples, param_count=model.param_count,
                         spectral=spectral_complexity(model), loss=model.spec.loss_for(model.task))
    err = test_error(model, split.test)
    if model.task == CLASSIFICATION:
        probes.test_error = err
    else:
        probes.mape, probes.rmse, probes.mse = err.mape, err.rmse, err.mse
    if rademacher:
        rad = empirical_rademacher(model.spec, pool.features, M, derive_seed(seed, "probe-rad"))
        probes.rademacher = rad.mean
        probes.rademacher_replicates = rad.replicates
        probes.rademacher_method = rad.method
        probes.kappa_emp = scale_complexity(rad.mean, pool.n_samples)
    if pac_bayes:
        probes.pac_bayes = pac_bayes_complexity(collect_posterior(model, window, sigma_p))
    return probes
