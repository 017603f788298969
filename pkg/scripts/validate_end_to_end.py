#!/usr/bin/env python3
"""Synthetic end-to-end validation: estimate a budget, sweep for the ground truth, score with ICD.

Two scenarios are run, each writing a report JSON and a sweep-curve CSV:

* regression: noisy nonlinear target, small MLP, jitter augmentation, pool of 70;
* classification: overlapping Gaussian clusters, regularized logistic model,
  class-conditional Gaussian sampler.
"""
import argparse
import os
import time

import numpy as np

from augsize import __version__
from augsize.dataset import CLASSIFICATION, REGRESSION, Dataset, split
from augsize.generators import GeneratorSpec
from augsize.icd import reference_quantile, snap_true, icd_score
from augsize.infotheory import BootstrapConfig
from augsize.itle import ItleConfig, run_itle
from augsize.mgee import MgeeConfig, MgeeRunConfig, run_mgee
from augsize.modeling import ModelSpec
from augsize.report import emit_report, envelope
from augsize.sweep import exhaustive_sweep, ground_truth


def regression_split(seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2, 2, size=(100, 4))
    y = 3 + np.sin(2 * X[:, 0]) + 0.5 * X[:, 1] ** 2 + 0.3 * X[:, 2] + rng.normal(0, 0.3, 100)
    return split(Dataset(X, y, REGRESSION, "nonlinear"), test_fraction=0.3, seed=seed)


def classification_split(seed):
    rng = np.random.default_rng(seed)
    centers = ((0, 0, 0), (1.2, 0, 0), (0, 1.2, 0))
    X = np.vstack([rng.normal(c, 1.0, size=(60, 3)) for c in centers])
    return split(Dataset(X, np.repeat([0, 1, 2], 60), CLASSIFICATION, "clusters"), test_fraction=0.3, seed=seed)


def score(interval, curve, n_pool):
    raw = ground_truth(curve)
    q = reference_quantile(n_pool)
    return raw, icd_score(interval, snap_true(raw, q), q)


def run_regression(seed, repeats):
    sp = regression_split(seed)
    model = ModelSpec("mlp", hidden=(8,), max_epochs=200)
    gen = GeneratorSpec("jitter", {"sigma": 0.1})
    rep = run_mgee(sp, model, gen, cfg=MgeeRunConfig(mgee=MgeeConfig(repeats=3)), seed=seed)
    curve = exhaustive_sweep(sp, model, gen, repeats=repeats, seed=seed)
    return "regression", rep, curve, sp.pool.n_samples


def run_classification(seed, repeats):
    sp = classification_split(seed)
    model = ModelSpec("linear-logistic", l2=1.0, max_epochs=100)
    gen = GeneratorSpec("class-gaussian")
    rep = run_itle(sp, model, gen, cfg=ItleConfig(boot=BootstrapConfig(n_boot=100)), seed=seed)
    curve = exhaustive_sweep(sp, model, gen, repeats=repeats, seed=seed)
    return "classification", rep, curve, sp.pool.n_samples


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out-dir", default="validation_out")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    os.makedirs(args.out_dir, exist_ok=True)
    for runner in (run_regression, run_classification):
        start = time.perf_counter()
        name, rep, curve, n_pool = runner(args.seed, args.repeats)
        raw, icd = score(rep.OSS, curve, n_pool)
        result = {"estimate": rep.to_dict(), "sweep": curve.to_dict(), "ground_truth": raw,
                  "icd": icd.to_dict()}
        doc = envelope(f"validate-{name}", {"seed": args.seed, "repeats": args.repeats}, result,
                       rep.warnings + [f[2] for f in curve.failed], __version__)
        emit_report(doc, os.path.join(args.out_dir, f"{name}.json"))
        curve.write_csv(os.path.join(args.out_dir, f"{name}_curve.csv"))
        means = ", ".join(f"{s}:{m:.3f}" for s, m in zip(curve.grid, curve.mean()))
        print(f"{name}: pool={n_pool} interval={rep.OSS} truth(raw)={raw} n_true={icd.n_true} "
              f"cov={icd.cov} dev={icd.dev_percent:.1f}%  ({time.perf_counter() - start:.1f}s)")
        print(f"  {curve.primary} by size: {means}")


if __name__ == "__main__":
    main()
