"""Exhaustive search over augmented sample sizes: the ground-truth oracle.

Every grid cell trains a fresh model on the training split plus ``s`` generated
rows and scores it on the test split. The ground truth is the smallest size
whose mean score sits within one standard deviation of the best mean.
"""
from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import CLASSIFICATION, SplitDataset
from .errors import AugsizeError, DataError, InsufficientSamplesError
from .generators import AugmentedSet, GeneratorSpec, draw_rows
from .icd import reference_quantile
from .modeling import ModelSpec, error_rate, fit_dataset, macro_f1, regression_metrics
from .seeding import derive_seed

PRIMARY = {CLASSIFICATION: "accuracy", "regression": "mape"}


class CellFailure(UserWarning):
    pass


@dataclass
class SweepCurve:
    task: str
    grid: list
    metrics: dict  # name -> {"mean": [...], "std": [...]}
    n_ok: list
    repeats: int
    seed: int
    failed: list = field(default_factory=list)  # [size, repeat, message]

    @property
    def primary(self):
        return PRIMARY[self.task]

    def mean(self, name=None):
        return np.asarray(self.metrics[name or self.primary]["mean"], dtype=float)

    def std(self, name=None):
        return np.asarray(self.metrics[name or self.primary]["std"], dtype=float)

    def to_dict(self):
        return {"task": self.task, "primary": self.primary, "grid": list(self.grid),
                "metrics": self.metrics, "n_ok": list(self.n_ok), "repeats": self.repeats,
                "seed": self.seed, "failed": list(self.failed)}

    def write_csv(self, path):
        names = [self.primary] + sorted(k for k in self.metrics if k != self.primary)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            head = ["size", "metric_mean", "metric_std"]
            for n in names[1:]:
                head += [f"{n}_mean", f"{n}_std"]
            w.writerow(head)
            for i, s in enumerate(self.grid):
                row = [s]
                for n in names:
                    row += [_fmt(self.metrics[n]["mean"][i]), _fmt(self.metrics[n]["std"][i])]
                w.writerow(row)


def _fmt(v):
    return "" if v is None or not np.isfinite(v) else format(float(v), ".12g")


def default_grid(n_train, steps=7):
    q = reference_quantile(n_train)
    return [q * i for i in range(steps + 1)]


def _score(model, test):
    pred = model.predict(test.features)
    if test.task == CLASSIFICATION:
        return {"accuracy": 1.0 - error_rate(test.labels, pred), "f1": macro_f1(test.labels, pred)}
    m = regression_metrics(test.labels, pred)
    return {"mape": m.mape, "rmse": m.rmse}


def _cell(split, spec, generator, augmented, size, r, seed):
    train = split.train
    if size:
        aug = draw_rows(train, generator, augmented, size, derive_seed(seed, "sweep-aug", size, r))
        train = train.concat(aug.features, aug.labels)
    model = fit_dataset(spec, train, split.val, derive_seed(seed, "sweep-fit", size, r))
    return _score(model, split.test)


def exhaustive_sweep(split: SplitDataset, spec: ModelSpec, generator: GeneratorSpec | None = None,
                     grid=None, repeats=3, seed=0, augmented: AugmentedSet | None = None,
                     threads=1) -> SweepCurve:
    """Cold-start train-and-test at every augmented size in ``grid``.

    Size 0 is prepended when absent. Failed cells are recorded and skipped; the
    sweep raises only when fewer than half of all cells succeed.
    """
    if generator is None and augmented is None:
        raise DataError("need a generator spec or generated data")
    if repeats < 1:
        raise DataError("repeats must be >= 1")
    if grid is None:
        grid = default_grid(split.pool.n_samples)
    grid = sorted({int(s) for s in grid} | {0})
    if grid[0] < 0:
        raise DataError("grid sizes must be >= 0")
    cells = [(s, r) for s in grid for r in range(repeats)]

    def run(cell):
        s, r = cell
        try:
            return _cell(split, spec, generator, augmented, s, r, seed)
        except (AugsizeError, ArithmeticError, np.linalg.LinAlgError) as exc:
            return exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]

    failed = [[s, r, str(res)] for (s, r), res in zip(cells, results) if isinstance(res, Exception)]
    if len(failed) * 2 > len(cells):
        raise InsufficientSamplesError(f"{len(failed)} of {len(cells)} sweep cells failed")
    for s, r, msg in failed:
        warnings.warn(f"sweep cell size={s} repeat={r} failed: {msg}", CellFailure)

    names = ["accuracy", "f1"] if split.pool.task == CLASSIFICATION else ["mape", "rmse"]
    metrics = {n: {"mean": [], "std": []} for n in names}
    n_ok = []
    for i, s in enumerate(grid):
        ok = [res for res in results[i * repeats:(i + 1) * repeats] if not isinstance(res, Exception)]
        n_ok.append(len(ok))
        for n in names:
            vals = np.array([o[n] for o in ok])
            metrics[n]["mean"].append(float(vals.mean()) if ok else float("nan"))
            metrics[n]["std"].append(float(vals.std()) if ok else float("nan"))
    return SweepCurve(split.pool.task, grid, metrics, n_ok, repeats, seed, failed)


def ground_truth(curve: SweepCurve):
    """Smallest size whose mean is within one std of the best mean (plateau rule)."""
    mean, std = curve.mean(), curve.std()
    ok = np.isfinite(mean)
    if not ok.any():
        raise DataError("every sweep cell failed")
    if curve.task == CLASSIFICATION:
        best = int(np.nanargmax(np.where(ok, mean, -np.inf)))
        within = ok & (mean >= mean[best] - std[best])
    else:
        best = int(np.nanargmin(np.where(ok, mean, np.inf)))
        within = ok & (mean <= mean[best] + std[best])
    return int(curve.grid[int(np.flatnonzero(within)[0])])
