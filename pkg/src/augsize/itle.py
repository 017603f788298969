"""Augmented-sample budget for classification with extended (generative) augmentation.

The information gap between a model's test error and the Fano error floor of
the data decides whether augmentation helps. If it does, an inverted
Rademacher generalization bound gives the effective sample size, which is
widened by a four-factor correction and rescaled by the generator's
information contribution ratio.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import CLASSIFICATION, SplitDataset
from .errors import DataError, run_stage
from .generators import AugmentedSet, GeneratorSpec, generator_rho
from .infotheory import BootstrapConfig, KsgConfig, RhoConfig, bootstrap_lower_bound, discrete_entropy
from .modeling import ModelProbes, ModelSpec, fit, probe_model
from .seeding import derive_seed

BIAS_EPS = 1e-12
LOSS_FACTORS = {"cross-entropy": 1.0, "mse": 1.1}


class BinaryFanoDegenerate(UserWarning):
    pass


@dataclass(frozen=True)
class BoundConfig:
    C: float = 1.0
    delta: float = 0.05
    gamma: float = 0.03

    def __post_init__(self):
        if self.C <= 0 or not 0 < self.delta <= 1 or self.gamma <= 0:
            raise ValueError("need C > 0, 0 < delta <= 1, gamma > 0")


@dataclass(frozen=True)
class AlphaConfig:
    percentile: float = 95.0
    bound_slope: float = 0.1
    loss_factors: dict = field(default_factory=lambda: dict(LOSS_FACTORS))
    lo: float = 1.0
    hi: float = 3.0


@dataclass(frozen=True)
class AlphaBreakdown:
    alpha_R: float
    alpha_bound: float
    alpha_opt: float
    alpha_loss: float

    @property
    def alpha(self):
        return self.alpha_R * self.alpha_bound * self.alpha_opt * self.alpha_loss


def round_half_up(x):
    return int(math.floor(x + 0.5))


def fano_floor(h_y, i_lb, n_classes):
    """Fano lower bound on the error rate, in nats, clamped to [0, 1].

    With two classes the denominator log(1) vanishes; a :class:`BinaryFanoDegenerate` is
    issued and the floor falls back to 0.
    """
    if n_classes < 2:
        raise DataError("need at least two classes")
    if n_classes == 2:
        warnings.warn("binary labels make the Fano floor degenerate; using 0", BinaryFanoDegenerate)
        return 0.0
    raw = (h_y - i_lb - 1.0) / math.log(n_classes - 1)
    return min(1.0, max(0.0, raw))


def information_gap(test_err, pe_lb):
    return max(0.0, test_err - pe_lb)


def invert_generalization_bound(kappa, cfg=BoundConfig()):
    """Sample size at which the Rademacher bound reaches tolerance ``gamma``."""
    return (cfg.C * kappa + math.sqrt(math.log(1.0 / cfg.delta) / 2.0)) ** 2 / cfg.gamma ** 2


def alpha_correction(replicates, n_classes, spectral, kappa, loss="cross-entropy", cfg=AlphaConfig()):
    """Four clamped factors: Rademacher spread, class count, spectral/empirical ratio, loss."""
    reps = np.asarray(replicates, dtype=float)
    if reps.size < 2:
        raise DataError("alpha correction needs at least 2 Rademacher replicates")

    def clamp(v):
        return min(cfg.hi, max(cfg.lo, v))

    mean = reps.mean()
    a_r = clamp(np.percentile(reps, cfg.percentile) / mean) if mean > 0 else 1.0
    a_b = clamp(1.0 + cfg.bound_slope * math.log(n_classes))
    a_o = clamp((spectral or 0.0) / max(kappa, 1e-9))
    a_l = clamp(cfg.loss_factors.get(loss, 1.0))
    return AlphaBreakdown(float(a_r), a_b, a_o, a_l)


@dataclass(frozen=True)
class ItleInterval:
    lower: int
    upper: int
    n_c: int
    saturated: bool


def itle_interval(bias, n_eff, n_train, alpha, rho):
    """Budget interval from the information gap and the size terms derived from it."""
    if not 0 < rho <= 1:
        raise DataError("rho must lie in (0, 1]")
    if alpha < 1:
        raise DataError("alpha must be >= 1")
    if bias <= BIAS_EPS:
        return ItleInterval(0, 0, 0, True)
    n_c = max(0, round_half_up(n_eff) - n_train)
    if n_c == 0:
        return ItleInterval(0, 0, 0, True)
    return ItleInterval(round_half_up(n_c / rho), round_half_up(alpha * n_c / rho), n_c, False)


@dataclass
class ItleReport:
    I_lb: float
    H_Y: float
    pe_lb: float
    e_test: float
    Bias: float
    R_hat: float
    kappa_emp: float
    n_eff: float
    N_train: int
    N_c: int
    alpha: float
    alpha_breakdown: dict
    rho: float
    rho_detail: dict
    OSS: list
    saturated: bool
    n_classes: int
    I_lb_replicates: list
    rademacher_replicates: list
    rademacher_method: str
    config: dict
    seed: int
    warnings: list = field(default_factory=list)

    @property
    def interval(self):
        return tuple(self.OSS)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ItleConfig:
    ksg: KsgConfig = KsgConfig()
    boot: BootstrapConfig = BootstrapConfig()
    rho: RhoConfig = RhoConfig()
    bound: BoundConfig = BoundConfig()
    alpha: AlphaConfig = AlphaConfig()
    rademacher_M: int = 20
    rho_samples: int | None = None  # generated rows for rho; None -> generator default
    threads: int = 1


def run_itle(split: SplitDataset, model: ModelSpec | ModelProbes, generator: GeneratorSpec | None = None,
             augmented: AugmentedSet | None = None, cfg: ItleConfig = ItleConfig(), seed=0) -> ItleReport:
    """Classification budget interval, recording every intermediate.

    ``model`` is either a spec to train or externally computed probes.
    ``augmented`` supplies external generated rows; otherwise ``generator``
    produces them from the training pool.
    """
    pool = split.pool
    if pool.task != CLASSIFICATION:
        raise DataError("the classification estimator needs a classification dataset")
    if generator is None and augmented is None:
        raise DataError("need a generator spec or generated data")
    n_classes = int(np.unique(pool.labels).size)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        boot_cfg = BootstrapConfig(cfg.boot.n_boot, cfg.boot.percentile, cfg.boot.resample_size,
                                   derive_seed(seed, "ilb"), cfg.boot.dedupe)
        boot = run_stage("mutual-information", bootstrap_lower_bound, pool.features, pool.labels,
                      cfg.ksg, boot_cfg, discrete=True, threads=cfg.threads)
        h_y = discrete_entropy(pool.labels)

        if isinstance(model, ModelProbes):
            probes = model
            if probes.task != CLASSIFICATION:
                raise DataError("probes describe a regression model")
        else:
            trained = run_stage("fit", fit, model, split, derive_seed(seed, "fit"))
            probes = run_stage("probes", probe_model, trained, split, cfg.rademacher_M,
                            derive_seed(seed, "probes"), pac_bayes=False)
        pe = run_stage("fano", fano_floor, h_y, boot.i_lb, n_classes)
        bias = information_gap(probes.test_error, pe)

        n_train = probes.n_train
        kappa = probes.kappa_emp
        n_eff = invert_generalization_bound(kappa, cfg.bound)
        reps = probes.rademacher_replicates or (probes.rademacher, probes.rademacher)
        ab = run_stage("alpha", alpha_correction, reps, n_classes, probes.spectral, kappa,
                    probes.loss or "cross-entropy", cfg.alpha)
        rho = run_stage("rho", generator_rho, pool, generator, augmented, cfg.rho, cfg.ksg, seed, cfg.rho_samples)
        iv = itle_interval(bias, n_eff, n_train, ab.alpha, rho.rho)

    return ItleReport(
        I_lb=boot.i_lb, H_Y=h_y, pe_lb=pe, e_test=probes.test_error, Bias=bias,
        R_hat=probes.rademacher, kappa_emp=kappa, n_eff=n_eff, N_train=n_train, N_c=iv.n_c,
        alpha=ab.alpha, alpha_breakdown=asdict(ab), rho=rho.rho, rho_detail=asdict(rho),
        OSS=[iv.lower, iv.upper], saturated=iv.saturated, n_classes=n_classes,
        I_lb_replicates=list(boot.replicates), rademacher_replicates=list(reps),
        rademacher_method=probes.rademacher_method, config=_config_echo(cfg), seed=seed,
        warnings=sorted({str(w.message) for w in caught}),
    )


def _config_echo(cfg):
    d = asdict(cfg)
    d.pop("threads", None)
    return d
