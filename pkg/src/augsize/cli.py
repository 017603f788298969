"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Diagnostics go to standard error; reports go to ``--out`` or standard output.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import time
import warnings

from . import __version__
from . import config as C
from .dataset import CLASSIFICATION, REGRESSION, load_table
from .errors import DataError, NumericalError, StageError
from .generators import augment, generator_rho, write_augmented
from .icd import icd_score, reference_quantile, snap_true
from .infotheory import bootstrap_lower_bound, discrete_entropy, ksg_mi
from .itle import run_itle
from .mgee import run_mgee
from .report import curve_csv_path, emit_report, envelope, load_report, write_rows_csv
from .seeding import derive_seed
from .sweep import exhaustive_sweep, ground_truth

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _diagnostic(exc):
    return str(exc) if isinstance(exc, UsageError) and str(exc).startswith("augsize") else f"augsize: {exc}"


SECTIONS = {
    "itle": ("data", "model", "gen", "ksg", "boot", "rho", "bound", "run"),
    "mgee": ("data", "model", "gen", "ksg", "rho", "mgee", "run"),
    "mi": ("data", "ksg", "boot", "run"),
    "rho": ("data", "gen", "ksg", "rho", "run"),
    "augment": ("data", "gen", "run"),
    "sweep": ("data", "model", "gen", "sweep", "run"),
}

HELP = {
    "itle": "classification budget interval (extended augmentation)",
    "mgee": "regression budget interval (transform augmentation)",
    "icd": "score an interval against a raw ground truth",
    "mi": "mutual information between features and labels with bootstrap lower bound",
    "rho": "information contribution ratio of a generator",
    "augment": "write generated rows to CSV",
    "sweep": "exhaustive search over augmented sizes",
    "report": "summarize a saved report",
}


def _add_options(p, sections):
    for opt in C.OPTIONS:
        if opt.section not in sections:
            continue
        default = f" (default: {opt.default})" if opt.default not in (None, "") else ""
        if opt.type is C.parse_bool:
            p.add_argument("--no-" + opt.key.replace("_", "-"), dest=opt.dest, action="store_const",
                           const=False, default=None, help=f"negate: {opt.help}")
        else:
            p.add_argument(opt.flag, dest=opt.dest, type=opt.type, default=None,
                           help=opt.help + default)


def _common(p, csv=False):
    p.add_argument("--config", help="INI config file; flags override its keys")
    p.add_argument("--out", help="report path (default: standard output)")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker cap (default: ${C.THREADS_ENV} or 1); results do not depend on it")
    p.add_argument("--timing", action="store_true", help="record wall-clock duration in the report")
    if csv:
        p.add_argument("--csv", action="store_true", help="write the curve as CSV beside the report")


def build_parser():
    parser = _Parser(prog="augsize", description="Augmented-sample budget estimation toolkit.")
    parser.add_argument("--version", action="version", version=f"augsize {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("itle", "mgee", "mi", "rho", "augment", "sweep"):
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        _add_options(p, SECTIONS[name])
        _common(p, csv=name in ("mgee", "sweep"))
        if name in ("mi", "rho", "augment", "sweep"):
            p.add_argument("--task", choices=(CLASSIFICATION, REGRESSION), default=CLASSIFICATION)
        if name == "augment":
            p.add_argument("--n", type=int, required=True, help="rows to generate")
        if name == "sweep":
            p.add_argument("--interval", type=int, nargs=2, metavar=("LOWER", "UPPER"),
                           help="also score this interval against the sweep's ground truth")
    p = sub.add_parser("icd", help=HELP["icd"], description=HELP["icd"])
    p.add_argument("--interval", type=int, nargs=2, metavar=("LOWER", "UPPER"), required=True)
    p.add_argument("--true", dest="n_raw", type=int, required=True, help="raw ground-truth optimum")
    p.add_argument("--n", dest="n_train", type=int, required=True, help="training-pool size")
    _common(p)
    p = sub.add_parser("report", help=HELP["report"], description=HELP["report"])
    p.add_argument("path")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    return parser


# -- subcommands -------------------------------------------------------------

def _cmd_itle(cfg, args, threads):
    split = C.load_split(cfg, CLASSIFICATION)
    seed = cfg["run"]["seed"]
    gen, aug = C.generator(cfg, split.parent, seed)
    rep = run_itle(split, C.model_or_probes(cfg), gen, aug, C.itle_config(cfg, threads), seed)
    return rep.to_dict(), rep.warnings, None


def _cmd_mgee(cfg, args, threads):
    split = C.load_split(cfg, REGRESSION)
    seed = cfg["run"]["seed"]
    gen, aug = C.generator(cfg, split.parent, seed)
    rep = run_mgee(split, C.model_or_probes(cfg), gen, aug, C.mgee_config(cfg, threads), seed)
    return rep.to_dict(), rep.warnings, (rep.curve, ("a", "G", "dG_da"))


def _cmd_mi(cfg, args, threads):
    split = C.load_split(cfg, args.task)
    pool = split.pool
    ksg, boot, _ = C.info_configs(cfg)
    seed = cfg["run"]["seed"]
    boot = dataclasses.replace(boot, seed=derive_seed(seed, "ilb"))
    discrete = args.task == CLASSIFICATION
    res = bootstrap_lower_bound(pool.features, pool.labels, ksg, boot, discrete=discrete, threads=threads)
    out = {"n": pool.n_samples, "k": ksg.k,
           "I_point": ksg_mi(pool.features, pool.labels, ksg, derive_seed(seed, "mi"), discrete=discrete),
           "I_lb": res.i_lb, "percentile": res.percentile, "replicates": list(res.replicates)}
    if discrete:
        out["H_Y"] = discrete_entropy(pool.labels)
    return out, [], None


def _cmd_rho(cfg, args, threads):
    split = C.load_split(cfg, args.task)
    seed = cfg["run"]["seed"]
    gen, aug = C.generator(cfg, split.parent, seed)
    ksg, _, rho_cfg = C.info_configs(cfg)
    est = generator_rho(split.pool, gen, aug, rho_cfg, ksg, seed, cfg["rho"]["samples"] or None)
    return dataclasses.asdict(est), [], None


def _cmd_sweep(cfg, args, threads):
    split = C.load_split(cfg, args.task)
    seed = cfg["run"]["seed"]
    gen, aug = C.generator(cfg, split.parent, seed)
    curve = exhaustive_sweep(split, C.model_spec(cfg), gen, C.sweep_grid(cfg), cfg["sweep"]["repeats"],
                             seed, augmented=aug, threads=threads)
    out = curve.to_dict()
    raw = ground_truth(curve)
    out["ground_truth"] = raw
    if args.interval:
        q = reference_quantile(split.pool.n_samples)
        out["icd"] = icd_score(args.interval, snap_true(raw, q), q).to_dict()
    rows = [(s, m, sd) for s, m, sd in zip(curve.grid, curve.mean().tolist(), curve.std().tolist())]
    return out, [], (rows, ("size", "metric_mean", "metric_std"))


def _cmd_icd(args):
    if args.n_train < 1:
        raise DataError("--n must be >= 1")
    q = reference_quantile(args.n_train)
    n_true = snap_true(args.n_raw, q)
    score = icd_score(args.interval, n_true, q)
    return {"cov": score.cov, "dev": score.dev, "n_true": n_true, "q": q, "n_raw": args.n_raw,
            "interval": list(args.interval)}


def _cmd_augment(cfg, args):
    d = cfg["data"]
    if not d["data"]:
        raise DataError("no data file given (--data)")
    if not args.out:
        raise UsageError("augment needs --out for the generated CSV")
    ds = load_table(d["data"], C._label(d["label"]), args.task, d["header"])
    gen, _ = C.generator(cfg, ds, cfg["run"]["seed"])
    if gen is None:
        raise DataError("augment needs a built-in generator (--gen)")
    aug = augment(ds, gen, args.n, seed=derive_seed(cfg["run"]["seed"], "augment-cmd"))
    write_augmented(aug, ds, args.out)


def _summary(doc):
    res = doc.get("result", {})
    lines = [f"command: {doc.get('command')}  schema: {doc.get('schema')}  seed: "
             f"{doc.get('config', {}).get('run', {}).get('seed', '-')}"]
    keys = ("OSS", "saturated", "Bias", "pe_lb", "I_lb", "e_test", "n_eff", "alpha", "rho", "A_PB",
            "a_star", "beta", "ground_truth", "cov", "dev", "n_true", "q", "I_point", "H_Y")
    for k in keys:
        if k in res:
            lines.append(f"  {k}: {res[k]}")
    for w in doc.get("warnings", []):
        lines.append(f"  warning: {w}")
    return "\n".join(lines) + "\n"


def _write(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


RUNNERS = {"itle": _cmd_itle, "mgee": _cmd_mgee, "mi": _cmd_mi, "rho": _cmd_rho, "sweep": _cmd_sweep}


def _dispatch(args):
    if args.command == "report":
        doc = load_report(args.path)
        _write(emit_report(doc) if args.format == "json" else _summary(doc), args.out)
        return
    start = time.perf_counter()
    threads = args.threads if args.threads is not None else C.default_threads()
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    if args.command == "icd":
        result, warns, cfg, curve = _cmd_icd(args), [], {}, None
    else:
        cfg = C.resolve(vars(args), args.config)
        if args.command == "augment":
            _cmd_augment(cfg, args)
            return
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result, warns, curve = RUNNERS[args.command](cfg, args, threads)
        warns = list(warns) + [str(w.message) for w in caught]
    duration = time.perf_counter() - start if args.timing else None
    echo = {k: v for k, v in cfg.items() if k in SECTIONS.get(args.command, ())}
    doc = envelope(args.command, echo, result, warns, __version__, duration)
    emit_report(doc, args.out, sys.stdout)
    if curve is not None and getattr(args, "csv", False):
        if not args.out:
            raise UsageError("--csv needs --out")
        write_rows_csv(curve[0], curve_csv_path(args.out), curve[1])
    for w in doc["warnings"]:
        print(f"warning: {w}", file=sys.stderr)


def _exit_code(exc):
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, (NumericalError, ArithmeticError)):
        return EXIT_NUMERIC
    if isinstance(exc, (UsageError, ValueError)):
        return EXIT_USAGE
    if isinstance(exc, OSError):
        return EXIT_DATA
    return None


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _dispatch(args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:
        code = _exit_code(exc)
        if code is None:
            raise
        print(_diagnostic(exc), file=sys.stderr)
        return code
    return EXIT_OK


def run_command(argv):
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
