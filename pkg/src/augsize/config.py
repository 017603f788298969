"""Run configuration layered from INI-style files and command-line overrides.

Every option lives in one registry keyed by ``(section, key)``. Precedence is
command-line flag, then config file, then the registry default. The effective
configuration is a nested ``{section: {key: value}}`` dict echoed in reports.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

from .dataset import CLASSIFICATION, REGRESSION, load_table, split
from .errors import DataError, MissingFileError
from .generators import GeneratorSpec, read_augmented
from .infotheory import BootstrapConfig, KsgConfig, RhoConfig
from .itle import BoundConfig, ItleConfig
from .mgee import MgeeConfig, MgeeRunConfig
from .modeling import ModelSpec, import_probes

THREADS_ENV = "AUGSIZE_THREADS"


@dataclass(frozen=True)
class Option:
    section: str
    key: str
    type: type
    default: object
    help: str
    cli: str | None = None  # flag override

    @property
    def dest(self):
        return f"{self.section}__{self.key}"

    @property
    def flag(self):
        if self.cli:
            return self.cli
        name = self.key if self.section in ("data", "run") else f"{self.section}-{self.key}"
        return "--" + name.replace("_", "-")


def parse_bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


OPTIONS = [
    Option("data", "data", str, None, "real data CSV (features plus one label column)"),
    Option("data", "label", str, "-1", "label column: name or index"),
    Option("data", "header", parse_bool, True, "first row is a header"),
    Option("data", "test_data", str, None, "separate test CSV; overrides --test-fraction"),
    Option("data", "test_fraction", float, 0.3, "held-out test share"),
    Option("model", "kind", str, "mlp", "mlp | linear-logistic | linear-regressor | ridge", "--model"),
    Option("model", "hidden", str, "32", "comma-separated hidden widths for mlp"),
    Option("model", "lr", float, 1e-2, "Adam learning rate"),
    Option("model", "max_epochs", int, 300, "epoch cap"),
    Option("model", "patience", int, 20, "early-stopping patience in epochs"),
    Option("model", "l2", float, 0.0, "weight decay"),
    Option("model", "batch_size", int, 0, "mini-batch size; 0 means full batch"),
    Option("model", "probes", str, None, "JSON file of externally computed probes (replaces training)",
           "--probes"),
    Option("gen", "kind", str, None, "jitter | scale | warp | interpolate | class-gaussian | class-kde",
           "--gen"),
    Option("gen", "params", str, "", "generator parameters as key=value pairs separated by commas"),
    Option("gen", "data", str, None, "CSV of externally generated rows"),
    Option("gen", "params_count", int, None, "parameter count of the external generator"),
    Option("ksg", "k", int, 5, "nearest neighbours in the MI estimator"),
    Option("boot", "n", int, 200, "bootstrap replicates"),
    Option("boot", "percentile", float, 5.0, "lower-bound percentile"),
    Option("rho", "q", int, 3, "PCA dimensions"),
    Option("rho", "bins", int, 8, "quantile bins per dimension and label bands"),
    Option("rho", "tau", float, 1e6, "generator complexity scale"),
    Option("rho", "pairing", str, "source-paired", "source-paired | nearest-same-class"),
    Option("rho", "samples", int, 0, "generated rows for the ratio; 0 means 10x pool size for transforms, 1x for samplers"),
    Option("bound", "C", float, 1.0, "bound compensation constant"),
    Option("bound", "delta", float, 0.05, "confidence"),
    Option("bound", "gamma", float, 0.03, "target tolerance"),
    Option("mgee", "iota", float, 1e-3, "slope threshold"),
    Option("mgee", "a_max", float, 50.0, "search ceiling for the ratio"),
    Option("mgee", "step", float, 1e-3, "bisection tolerance"),
    Option("mgee", "c1", float, 0.05, "PAC factor constant"),
    Option("mgee", "c2", float, 0.25, "ratio factor constant"),
    Option("mgee", "c3", float, 0.5, "spread factor constant"),
    Option("mgee", "repeats", int, 5, "augmented reruns for the spread factor"),
    Option("sweep", "grid", str, "", "comma-separated sizes; empty means 0, Q, ..., 7Q"),
    Option("sweep", "repeats", int, 3, "repeats per size"),
    Option("run", "seed", int, 0, "master seed"),
    Option("run", "rademacher_m", int, 20, "Rademacher replicates"),
    Option("run", "pac_window", int, 20, "snapshot window for the posterior"),
    Option("run", "sigma_p", float, 1.0, "prior standard deviation"),
]

BY_KEY = {(o.section, o.key): o for o in OPTIONS}


def defaults():
    out = {}
    for o in OPTIONS:
        out.setdefault(o.section, {})[o.key] = o.default
    return out


def read_config_file(path):
    """Parse an INI file into ``{section: {key: value}}`` with typed values."""
    if not os.path.isfile(path):
        raise MissingFileError(path)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise DataError(f"{path}: {exc}") from None
    out = {}
    for section in parser.sections():
        for key, text in parser.items(section):
            opt = BY_KEY.get((section, key))
            if opt is None:
                raise DataError(f"{path}: unknown option [{section}] {key}")
            try:
                out.setdefault(section, {})[key] = opt.type(text)
            except ValueError:
                raise DataError(f"{path}: bad value for [{section}] {key}: {text!r}") from None
    return out


def resolve(flags: dict, config_path=None):
    """Layer non-``None`` flag values over an optional config file over the defaults."""
    cfg = defaults()
    if config_path:
        for section, values in read_config_file(config_path).items():
            cfg[section].update(values)
    for dest, value in flags.items():
        if value is None or "__" not in dest:
            continue
        section, key = dest.split("__", 1)
        if (section, key) in BY_KEY:
            cfg[section][key] = value
    return cfg


def default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# -- builders ----------------------------------------------------------------

def _label(text):
    return int(text) if str(text).lstrip("-").isdigit() else text


def load_split(cfg, task):
    d = cfg["data"]
    if not d["data"]:
        raise DataError("no data file given (--data)")
    ds = load_table(d["data"], _label(d["label"]), task, d["header"])
    if d["test_data"]:
        test = load_table(d["test_data"], _label(d["label"]), task, d["header"])
        return split(ds, test=test, seed=cfg["run"]["seed"])
    return split(ds, test_fraction=d["test_fraction"], seed=cfg["run"]["seed"])


def parse_kv(text):
    out = {}
    for item in filter(None, (s.strip() for s in (text or "").split(","))):
        if "=" not in item:
            raise ValueError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = float(v)
    return out


def model_spec(cfg):
    m = cfg["model"]
    hidden = tuple(int(h) for h in str(m["hidden"]).split(",") if h.strip())
    return ModelSpec(kind=m["kind"], hidden=hidden or (32,), lr=m["lr"], max_epochs=m["max_epochs"],
                     patience=m["patience"], l2=m["l2"], batch_size=m["batch_size"] or None)


def model_or_probes(cfg):
    path = cfg["model"]["probes"]
    return import_probes(path) if path else model_spec(cfg)


def generator(cfg, like, seed):
    """Return ``(GeneratorSpec | None, AugmentedSet | None)`` from the ``gen`` section."""
    g = cfg["gen"]
    if g["data"]:
        return None, read_augmented(g["data"], like, _label(cfg["data"]["label"]), g["params_count"], seed)
    if not g["kind"]:
        raise DataError("no generator given (--gen-kind or --gen-data)")
    return GeneratorSpec(g["kind"], parse_kv(g["params"]), g["params_count"], seed), None


def info_configs(cfg):
    r = cfg["rho"]
    ksg = KsgConfig(cfg["ksg"]["k"])
    boot = BootstrapConfig(cfg["boot"]["n"], cfg["boot"]["percentile"])
    rho = RhoConfig(q=r["q"], bins=r["bins"], tau=r["tau"], pairing=r["pairing"])
    return ksg, boot, rho


def itle_config(cfg, threads=1):
    ksg, boot, rho = info_configs(cfg)
    b = cfg["bound"]
    return ItleConfig(ksg=ksg, boot=boot, rho=rho, bound=BoundConfig(b["C"], b["delta"], b["gamma"]),
                      rademacher_M=cfg["run"]["rademacher_m"], rho_samples=cfg["rho"]["samples"] or None,
                      threads=threads)


def mgee_config(cfg, threads=1):
    ksg, _, rho = info_configs(cfg)
    m = cfg["mgee"]
    mc = MgeeConfig(iota=m["iota"], a_max=m["a_max"], step=m["step"], c1=m["c1"], c2=m["c2"],
                    c3=m["c3"], repeats=m["repeats"])
    return MgeeRunConfig(mgee=mc, ksg=ksg, rho=rho, pac_window=cfg["run"]["pac_window"],
                         sigma_p=cfg["run"]["sigma_p"], rho_samples=cfg["rho"]["samples"] or None,
                         threads=threads)


def sweep_grid(cfg):
    text = cfg["sweep"]["grid"]
    return [int(s) for s in text.split(",") if s.strip()] or None


TASK_FOR = {"itle": CLASSIFICATION, "mgee": REGRESSION}
