import sys
import csv

import numpy as np
import pytest

from augsize.dataset import CLASSIFICATION, REGRESSION, Dataset, split


def blobs(n_per_class=60, centers=((0, 0), (6, 0), (0, 6)), scale=0.5, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(c, scale, size=(n_per_class, len(c))) for c in centers])
    y = np.repeat(np.arange(len(centers)), n_per_class)
    return Dataset(X, y, CLASSIFICATION, "blobs")


def nonlinear_regression(n=100, noise=0.3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2, 2, size=(n, 4))
    y = 3 + np.sin(2 * X[:, 0]) + 0.5 * X[:, 1] ** 2 + 0.3 * X[:, 2] + rng.normal(0, noise, n)
    return Dataset(X, y, REGRESSION, "nonlinear")


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        w.writerows(rows)
    return path


@pytest.fixture
def blob_split():
    return split(blobs(), test_fraction=0.3, seed=0)


@pytest.fixture
def reg_split():
    return split(nonlinear_regression(), test_fraction=0.3, seed=0)


@pytest.fixture
def class_csv(tmp_path):
    ds = blobs(n_per_class=40, centers=((0, 0, 0), (1.5, 0, 0), (0, 1.5, 0)), scale=1.0, seed=3)
    rows = [list(x) + ["abc"[c]] for x, c in zip(ds.features, ds.labels)]
    return write_csv(tmp_path / "c.csv", ["f1", "f2", "f3", "cls"], rows)


@pytest.fixture
def reg_csv(tmp_path):
    ds = nonlinear_regression()
    rows = [list(x) + [t] for x, t in zip(ds.features, ds.labels)]
    return write_csv(tmp_path / "r.csv", ["a", "b", "c", "d", "y"], rows)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
