#!/usr/bin/env python3
"""How the regression budget responds to each of its driving factors.

Prints four tables (and optionally writes them as CSV):

* saturation ratio and interval vs PAC-Bayes complexity,
* saturation ratio vs contribution ratio rho,
* saturation ratio vs slope threshold iota,
* rho measured for each built-in generator on synthetic data.
"""
import argparse
import os
import warnings

import numpy as np

from augsize.dataset import CLASSIFICATION, REGRESSION, Dataset
from augsize.generators import GeneratorSpec, generator_rho
from augsize.mgee import CeilingHit, MgeeConfig, beta_correction, mgee_interval, saturation_ratio
from augsize.report import write_rows_csv


def complexity_table(n_train, rho, cfg):
    rows = []
    for pac in (0.001, 0.022, 1.0, 9.729, 14.977, 21.377, 75.521, 200.0):
        a = saturation_ratio(pac, rho, n_train, cfg)
        beta = beta_correction(pac, 1000, rho, [1.0, 1.0], cfg).beta
        rows.append((pac, a, *mgee_interval(n_train, a, beta)))
    return ("A_PB", "a_star", "lower", "upper"), rows


def rho_table(n_train, pac, cfg):
    return ("rho", "a_star"), [(r, saturation_ratio(pac, r, n_train, cfg))
                               for r in (0.01, 0.05, 0.109, 0.2, 0.4, 0.6, 0.8, 1.0)]


def iota_table(n_train, pac, rho):
    return ("iota", "a_star"), [(i, saturation_ratio(pac, rho, n_train, MgeeConfig(iota=i)))
                                for i in (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)]


def generator_table(seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2, 2, size=(100, 4))
    y = 3 + np.sin(2 * X[:, 0]) + 0.5 * X[:, 1] ** 2 + rng.normal(0, 0.3, 100)
    reg = Dataset(X, y, REGRESSION, "regression")
    Xc = np.vstack([rng.normal(c, 0.8, size=(50, 3)) for c in ((0, 0, 0), (2, 0, 0), (0, 2, 0))])
    cls = Dataset(Xc, np.repeat([0, 1, 2], 50), CLASSIFICATION, "classification")
    specs = [("regression", reg, GeneratorSpec("jitter", {"sigma": s})) for s in (0.02, 0.1, 0.5)]
    specs += [("regression", reg, GeneratorSpec(k)) for k in ("scale", "warp", "interpolate")]
    specs += [("classification", cls, GeneratorSpec(k)) for k in ("jitter", "interpolate", "class-gaussian",
                                                                   "class-kde")]
    rows = []
    for task, ds, spec in specs:
        est = generator_rho(ds, spec, seed=seed)
        label = spec.kind + ("" if spec.kind != "jitter" else f"(sigma={spec.params['sigma']})")
        rows.append((task, label, est.cmi, est.h_cond, est.rho))
    return ("task", "generator", "cmi", "h_cond", "rho"), rows


def show(title, header, rows):
    print(f"\n{title}")
    print("  ".join(f"{h:>14}" for h in header))
    for row in rows:
        print("  ".join(f"{v:>14.4g}" if isinstance(v, float) else f"{v!s:>14}" for v in row))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n-train", type=int, default=70)
    ap.add_argument("--rho", type=float, default=0.109)
    ap.add_argument("--pac-bayes", type=float, default=9.729)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv-dir", help="also write each table as CSV here")
    args = ap.parse_args(argv)
    cfg = MgeeConfig()
    warnings.simplefilter("ignore", CeilingHit)
    tables = {
        "complexity": complexity_table(args.n_train, args.rho, cfg),
        "rho": rho_table(args.n_train, args.pac_bayes, cfg),
        "iota": iota_table(args.n_train, args.pac_bayes, args.rho),
        "generators": generator_table(args.seed),
    }
    for name, (header, rows) in tables.items():
        show(name, header, rows)
        if args.csv_dir:
            os.makedirs(args.csv_dir, exist_ok=True)
            write_rows_csv(rows, os.path.join(args.csv_dir, f"{name}.csv"), header)


if __name__ == "__main__":
    main()
