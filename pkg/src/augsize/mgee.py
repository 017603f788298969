"""Augmented-sample budget for regression with non-extended (transform) augmentation.

Redundant augmented rows only partly count as new samples, so the effective
sample size grows sublinearly in the augmentation ratio ``a``. Plugging it into
a PAC-Bayes generalization term gives a curve ``G(a)`` whose slope flattens;
the saturation ratio is where the slope magnitude drops below ``iota``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dataset import REGRESSION, SplitDataset
from .errors import DataError, run_stage
from .generators import AugmentedSet, GeneratorSpec, draw_rows, generator_rho
from .infotheory import KsgConfig, RhoConfig
from .itle import round_half_up
from .modeling import (
    ModelProbes,
    ModelSpec,
    fit,
    fit_dataset,
    probe_model,
    regression_metrics,
)
from .seeding import derive_seed


class CeilingHit(UserWarning):
    pass


@dataclass(frozen=True)
class MgeeConfig:
    iota: float = 1e-3
    a_max: float = 50.0
    step: float = 1e-3
    c1: float = 0.05
    c2: float = 0.25
    c3: float = 0.5
    repeats: int = 5
    curve_points: int = 40

    def __post_init__(self):
        if self.iota <= 0 or self.a_max <= 0 or self.step <= 0:
            raise ValueError("need iota > 0, a_max > 0, step > 0")
        if min(self.c1, self.c2, self.c3) < 0:
            raise ValueError("beta constants must be >= 0")
        if self.repeats < 0 or self.repeats == 1 or self.curve_points < 2:
            raise ValueError("need repeats of 0 or >= 2 and curve_points >= 2")


def effective_sample_size(a, rho, n_train):
    """Real plus augmented rows, discounting the redundant share ``1 - rho``."""
    return n_train * (1.0 + a) / (1.0 + a * (1.0 - rho))


def generalization_value(pac_bayes, n_eff):
    if n_eff <= 0:
        raise DataError("n_eff must be > 0")
    return math.sqrt(pac_bayes / n_eff)


def derivative_g(a, pac_bayes, rho, n_train):
    """Magnitude of dG/da in closed form (G itself is non-increasing in ``a``)."""
    return (math.sqrt(pac_bayes / n_train) * rho
            / (2.0 * (1.0 + a) ** 1.5 * math.sqrt(1.0 + a * (1.0 - rho))))


def saturation_ratio(pac_bayes, rho, n_train, cfg=MgeeConfig()):
    """Smallest ``a`` in ``[0, a_max]`` with ``|dG/da| <= iota``, by bisection.

    The slope magnitude is strictly decreasing in ``a`` when ``rho > 0``. If it
    is still above ``iota`` at ``a_max`` a :class:`CeilingHit` warning is
    issued and ``a_max`` returned.
    """
    def f(a):
        return derivative_g(a, pac_bayes, rho, n_train)

    if f(0.0) <= cfg.iota:
        return 0.0
    if f(cfg.a_max) > cfg.iota:
        warnings.warn(f"slope still above iota at a_max={cfg.a_max}", CeilingHit)
        return float(cfg.a_max)
    lo, hi = 0.0, float(cfg.a_max)
    while hi - lo > cfg.step:
        mid = 0.5 * (lo + hi)
        if f(mid) <= cfg.iota:
            hi = mid
        else:
            lo = mid
    return hi


def saturation_ratio_grid(pac_bayes, rho, n_train, iota=1e-3, a_max=50.0, step=1e-4):
    """Dense-grid reference for :func:`saturation_ratio`."""
    grid = np.arange(0.0, a_max + step / 2, step)
    rho_c = 1.0 - rho
    slope = math.sqrt(pac_bayes / n_train) * rho / (2.0 * (1.0 + grid) ** 1.5 * np.sqrt(1.0 + grid * rho_c))
    hit = np.flatnonzero(slope <= iota)
    return float(grid[hit[0]]) if hit.size else float(a_max)


@dataclass(frozen=True)
class BetaBreakdown:
    beta_PAC: float
    beta_rho: float
    beta_emp: float

    @property
    def beta(self):
        return self.beta_PAC * self.beta_rho * self.beta_emp


def beta_correction(pac_bayes, param_count, rho, errors, cfg=MgeeConfig()):
    """Clamped correction factors whose product scales the interval."""
    if param_count < 1:
        raise DataError("param_count must be >= 1")

    def clamp(v):
        return min(2.0, max(1.0, v))

    errs = np.asarray(errors, dtype=float)
    if errs.size == 0:
        warnings.warn("no repeated errors; beta_emp set to 1")
        b_emp = 1.0
    elif errs.size < 2:
        raise DataError("need at least 2 repeated errors")
    else:
        mean = errs.mean()
        b_emp = clamp(1.0 + cfg.c3 * errs.std() / mean) if mean > 0 else 1.0
    return BetaBreakdown(clamp(1.0 + cfg.c1 * math.tanh(pac_bayes / param_count)),
                         clamp(1.0 + cfg.c2 * rho * rho), float(b_emp))


def mgee_interval(n_train, a_star, beta):
    n_r = round_half_up(n_train * a_star)
    return n_r, round_half_up(n_r * beta)


def curve_samples(pac_bayes, rho, n_train, cfg=MgeeConfig()):
    """``(a, G, |dG/da|)`` at 0 and a log-spaced grid up to ``a_max``."""
    grid = np.concatenate([[0.0], np.geomspace(1e-3, cfg.a_max, cfg.curve_points - 1)])
    return [(float(a), generalization_value(pac_bayes, effective_sample_size(a, rho, n_train)),
             derivative_g(a, pac_bayes, rho, n_train)) for a in grid]


@dataclass
class MgeeReport:
    A_PB: float
    rho: float
    rho_detail: dict
    N_train: int
    a_star: float
    N_r: int
    beta: float
    beta_breakdown: dict
    OSS: list
    errors: list
    mape: float | None
    param_count: int
    curve: list
    config: dict
    seed: int
    warnings: list = field(default_factory=list)

    @property
    def interval(self):
        return tuple(self.OSS)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MgeeRunConfig:
    mgee: MgeeConfig = MgeeConfig()
    ksg: KsgConfig = KsgConfig()
    rho: RhoConfig = RhoConfig()
    pac_window: int = 20
    sigma_p: float = 1.0
    rho_samples: int | None = None
    threads: int = 1


def repeated_errors(split: SplitDataset, spec: ModelSpec, generator, augmented, n_aug, repeats, seed):
    """Validation MAPE of cold-start models trained on train plus ``n_aug`` generated rows."""
    out = []
    for r in range(repeats):
        aug = draw_rows(split.train, generator, augmented, n_aug, derive_seed(seed, "beta-aug", r))
        train = split.train.concat(aug.features, aug.labels)
        model = fit_dataset(spec, train, split.val, derive_seed(seed, "beta-fit", r))
        out.append(regression_metrics(split.val.labels, model.predict(split.val.features)).mape)
    return out


def run_mgee(split: SplitDataset, model: ModelSpec | ModelProbes, generator: GeneratorSpec | None = None,
             augmented: AugmentedSet | None = None, cfg: MgeeRunConfig = MgeeRunConfig(), seed=0) -> MgeeReport:
    """Regression budget interval, recording every intermediate.

    With probes instead of a model spec, the run-to-run errors come from the
    probes' ``error_repeats`` (possibly empty, giving ``beta_emp = 1``).
    """
    pool = split.pool
    if pool.task != REGRESSION:
        raise DataError("the regression estimator needs a regression dataset")
    if generator is None and augmented is None:
        raise DataError("need a generator spec or generated data")
    mc = cfg.mgee
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if isinstance(model, ModelProbes):
            probes = model
            if probes.task != REGRESSION:
                raise DataError("probes describe a classification model")
        else:
            trained = run_stage("fit", fit, model, split, derive_seed(seed, "fit"))
            probes = run_stage("probes", probe_model, trained, split, seed=derive_seed(seed, "probes"),
                            window=cfg.pac_window, sigma_p=cfg.sigma_p, rademacher=False)
        a_pb = probes.pac_bayes
        n_train = probes.n_train
        rho = run_stage("rho", generator_rho, pool, generator, augmented, cfg.rho, cfg.ksg, seed, cfg.rho_samples)
        a_star = saturation_ratio(a_pb, rho.rho, n_train, mc)
        n_r = round_half_up(n_train * a_star)
        if isinstance(model, ModelProbes):
            errs = list(probes.error_repeats)
        else:
            chosen = replace(model, grid={}, **(trained.grid_choice or {}))
            errs = run_stage("repeats", repeated_errors, split, chosen, generator, augmented, n_r,
                          mc.repeats, seed)
        beta = run_stage("beta", beta_correction, a_pb, probes.param_count, rho.rho, errs, mc)
        lower, upper = mgee_interval(n_train, a_star, beta.beta)
        curve = curve_samples(a_pb, rho.rho, n_train, mc)

    return MgeeReport(
        A_PB=a_pb, rho=rho.rho, rho_detail=asdict(rho), N_train=n_train, a_star=a_star, N_r=lower,
        beta=beta.beta, beta_breakdown=asdict(beta), OSS=[lower, upper], errors=errs,
        mape=probes.mape, param_count=probes.param_count, curve=[list(c) for c in curve],
        config=_config_echo(cfg), seed=seed, warnings=sorted({str(w.message) for w in caught}),
    )


def _config_echo(cfg):
    d = asdict(cfg)
    d.pop("threads", None)
    return d
