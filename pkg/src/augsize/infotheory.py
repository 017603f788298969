"""Nearest-neighbour information estimates and the information contribution ratio.

All quantities are in nats.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .dataset import fit_pca, minmax_normalize
from .errors import DataError, InsufficientSamplesError
from .seeding import derive_rng, derive_seed

KSG_FLOOR = -0.1
RHO_MIN = 1e-3


class EstimatorWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KsgConfig:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class BootstrapConfig:
    n_boot: int = 200
    percentile: float = 5.0
    resample_size: int | None = None  # None -> n
    seed: int = 0
    dedupe: bool = True  # exact duplicate draws sit at distance 0 and inflate KSG

    def __post_init__(self):
        if self.n_boot < 2:
            raise ValueError("need at least 2 bootstrap replicates")
        if not 0 < self.percentile < 100:
            raise ValueError("percentile must lie in (0, 100)")


@dataclass(frozen=True)
class RhoConfig:
    q: int = 3
    bins: int = 8
    eps: float = 1e-10
    tau: float = 1e6
    pairing: str = "source-paired"
    rho_min: float = RHO_MIN

    def __post_init__(self):
        if self.q < 1 or self.bins < 2 or self.eps <= 0 or self.tau <= 0:
            raise ValueError("invalid RhoConfig")
        if self.pairing not in ("source-paired", "nearest-same-class"):
            raise ValueError(f"unknown pairing {self.pairing!r}")


# -- digamma -----------------------------------------------------------------

_ASYMPTOTIC = (1 / 12, -1 / 120, 1 / 252, -1 / 240, 1 / 132, -691 / 32760)


def digamma(x):
    """Digamma function for positive real arguments (scalar or array).

    Shifts small arguments upward with psi(x) = psi(x + 1) - 1/x until x >= 10,
    then sums the asymptotic series; absolute error is below 1e-13.
    """
    scalar = np.isscalar(x)
    x = np.array(x, dtype=float, copy=True)
    if np.any(~(x > 0)):
        raise ValueError("digamma is only defined here for x > 0")
    acc = np.zeros_like(x)
    small = x < 10.0
    while np.any(small):
        acc[small] -= 1.0 / x[small]
        x[small] += 1.0
        small = x < 10.0
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    for c in reversed(_ASYMPTOTIC):
        series = (series + c) * inv2
    out = acc + np.log(x) - 0.5 / x - series
    return float(out) if scalar else out


# -- KSG ---------------------------------------------------------------------

def _as_matrix(a):
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def _is_discrete(y, discrete):
    if discrete is not None:
        return discrete
    y = np.asarray(y)
    return y.ndim == 1 and y.dtype.kind in "iub"


def _jitter(n, seed):
    return derive_rng(seed, "ksg-jitter").uniform(-1.0, 1.0, size=(n, 1))


def _jitter_scale(Z):
    span = np.ptp(Z, axis=0)
    return 1e-12 * np.where(span > 0, span, np.maximum(np.abs(Z).max(axis=0), 1.0))


def _strict_counts(points, radii):
    """Number of other points strictly inside the max-norm ball of each point."""
    tree = cKDTree(points)
    r = np.nextafter(radii, 0.0)
    counts = tree.query_ball_point(points, r, p=np.inf, return_length=True) - 1
    return np.where(radii > 0, counts, 0)


def ksg_mi_raw(X, Y, cfg=KsgConfig(), seed=0, discrete=None):
    """Unclamped KSG estimate of I(X; Y).

    Continuous ``Y`` uses the first KSG estimator with the max-norm in the joint
    space. Integer labels use the mixed discrete/continuous form: the k-NN search
    runs within each label class, ``n_y`` is the class size minus one and
    ``n_x`` counts all points strictly inside the same radius.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    k = cfg.k
    if np.asarray(Y).shape[0] != n:
        raise DataError("X and Y differ in length")
    if n < k + 2:
        raise InsufficientSamplesError(f"KSG needs n >= k + 2 = {k + 2}, got {n}")
    if not np.all(np.isfinite(X)):
        raise DataError("X contains non-finite values")
    u = _jitter(n, seed)

    if _is_discrete(Y, discrete):
        y = np.asarray(Y)
        Xj = X + u * _jitter_scale(X)
        _, codes, counts = np.unique(y, return_inverse=True, return_counts=True)
        keep = counts[codes] > 1
        Xj, codes = Xj[keep], codes[keep]
        m = Xj.shape[0]
        if m < k + 2:
            raise InsufficientSamplesError("too few non-singleton samples for KSG")
        radii = np.empty(m)
        k_eff = np.empty(m)
        n_y = np.empty(m)
        for c in np.unique(codes):
            rows = np.flatnonzero(codes == c)
            kc = min(k, len(rows) - 1)
            d, _ = cKDTree(Xj[rows]).query(Xj[rows], k=kc + 1, p=np.inf)
            radii[rows] = d[:, kc]
            k_eff[rows] = kc
            n_y[rows] = len(rows) - 1
        n_x = _strict_counts(Xj, radii)
        return float(np.mean(digamma(k_eff)) + digamma(m)
                     - np.mean(digamma(n_x + 1.0) + digamma(n_y + 1.0)))

    Yc = _as_matrix(Y)
    Z = np.hstack([X, Yc])
    Z = Z + u * _jitter_scale(Z)
    Xj, Yj = Z[:, :X.shape[1]], Z[:, X.shape[1]:]
    d, _ = cKDTree(Z).query(Z, k=k + 1, p=np.inf)
    eps = d[:, k]
    n_x = _strict_counts(Xj, eps)
    n_y = _strict_counts(Yj, eps)
    return float(digamma(k) + digamma(n) - np.mean(digamma(n_x + 1.0) + digamma(n_y + 1.0)))


def ksg_mi(X, Y, cfg=KsgConfig(), seed=0, discrete=None):
    """KSG estimate of I(X; Y) in nats, floored at -0.1. See :func:`ksg_mi_raw`."""
    return max(ksg_mi_raw(X, Y, cfg, seed, discrete), KSG_FLOOR)


@dataclass(frozen=True)
class BootstrapResult:
    i_lb: float
    replicates: tuple
    percentile: float

    def at(self, percentile):
        return percentile_lower_bound(self.replicates, percentile)


def percentile_lower_bound(replicates, percentile):
    """Linear-interpolated percentile of the replicates, clamped below at 0."""
    return max(0.0, float(np.percentile(np.asarray(replicates, dtype=float), percentile)))


def bootstrap_lower_bound(X, Y, ksg=KsgConfig(), boot=BootstrapConfig(), discrete=None, threads=1):
    """Conservative percentile of KSG estimates over bootstrap resamples.

    Replicate ``b`` resamples ``m`` rows with replacement from a stream derived
    from ``(boot.seed, b)``, so the result does not depend on ``threads``. With
    ``boot.dedupe`` the estimate runs on the distinct rows drawn.
    """
    X = _as_matrix(X)
    Y = np.asarray(Y)
    n = X.shape[0]
    m = boot.resample_size or n
    if m < ksg.k + 1:
        raise DataError("bootstrap resample size must exceed k")
    discrete = _is_discrete(Y, discrete)

    def one(b):
        idx = derive_rng(boot.seed, "bootstrap", b).integers(0, n, size=m)
        if boot.dedupe:
            idx = np.unique(idx)
        return ksg_mi_raw(X[idx], Y[idx], ksg, seed=derive_seed(boot.seed, "bootstrap-ksg", b),
                          discrete=discrete)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reps = list(pool.map(one, range(boot.n_boot)))
    else:
        reps = [one(b) for b in range(boot.n_boot)]
    return BootstrapResult(percentile_lower_bound(reps, boot.percentile), tuple(reps), boot.percentile)


# -- discrete entropies ------------------------------------------------------

def discrete_entropy(labels):
    """Plug-in entropy of a label sequence."""
    _, counts = np.unique(np.asarray(labels), return_counts=True, axis=0)
    p = counts / counts.sum()
    return float(-np.sum(p * np.log(p)))


def condition_labels(y, bins):
    """Integer conditioning codes: labels pass through, continuous targets get quantile bands."""
    y = np.asarray(y)
    if y.dtype.kind in "iub":
        return y.astype(np.int64)
    edges = np.quantile(y, np.linspace(0, 1, bins + 1)[1:-1])
    return np.searchsorted(edges, y, side="right").astype(np.int64)


def _fit_pca_capped(X, q):
    X = _as_matrix(X)
    return fit_pca(X, min(q, X.shape[1], X.shape[0]))


def _quantile_codes(Z, bins):
    codes = np.zeros(Z.shape[0], dtype=np.int64)
    for j in range(Z.shape[1]):
        col = Z[:, j]
        edges = np.quantile(col, np.linspace(0, 1, bins + 1)[1:-1])
        codes = codes * bins + np.searchsorted(edges, col, side="right")
    return codes


def conditional_entropy_binned(X, y, cfg=RhoConfig()):
    """Plug-in H(X | Y) over quantile bins of the PCA-reduced, min-max scaled X."""
    X = _as_matrix(X)
    y = condition_labels(y, cfg.bins)
    pca = _fit_pca_capped(X, cfg.q)
    Z = minmax_normalize(pca.transform(X))
    cells = _quantile_codes(Z, cfg.bins)
    n = len(y)
    h = 0.0
    for c in np.unique(y):
        mask = y == c
        if mask.sum() < 2:
            warnings.warn(f"class {c} has a single sample; contributes 0 to H(X|Y)", EstimatorWarning)
            continue
        h += mask.sum() / n * discrete_entropy(cells[mask])
    return float(h)


def pair_samples(xr, yr, xg, yg=None, source_index=None, mode="source-paired"):
    """Align each generated row with a real row.

    Returns ``(xr_paired, xg, labels)`` where labels come from the real partner.
    ``source-paired`` uses ``source_index``; rows without a valid source fall back
    to the nearest real row of the same label (``nearest-same-class``). Sampled
    sets, where no row has a source, take the fallback without a warning.
    """
    xr, xg = _as_matrix(xr), _as_matrix(xg)
    yr = np.asarray(yr)
    partner = np.full(xg.shape[0], -1, dtype=np.int64)
    if mode == "source-paired" and source_index is not None:
        partner = np.asarray(source_index, dtype=np.int64).copy()
        partner[(partner < 0) | (partner >= xr.shape[0])] = -1
        if np.any(partner < 0) and not np.all(partner < 0):
            warnings.warn("generated rows without a source fall back to nearest-same-class pairing",
                          EstimatorWarning)
    elif mode == "source-paired":
        warnings.warn("no source indices; using nearest-same-class pairing", EstimatorWarning)
    pending = np.flatnonzero(partner < 0)
    if pending.size:
        classed = yr.dtype.kind in "iub" and yg is not None
        groups = np.unique(yr) if classed else [None]
        for c in groups:
            cand = np.flatnonzero(yr == c) if classed else np.arange(xr.shape[0])
            rows = pending[np.asarray(yg)[pending] == c] if classed else pending
            if rows.size == 0:
                continue
            if cand.size == 0:
                raise DataError(f"generated label {c} has no real counterpart")
            _, j = cKDTree(xr[cand]).query(xg[rows], k=1)
            partner[rows] = cand[j]
    return xr[partner], xg, yr[partner]


def conditional_mi(xr, xg, y, cfg=RhoConfig(), ksg=KsgConfig(), seed=0):
    """I(Xr; Xg | Y) from row-paired real/generated samples.

    Both sides are projected on the real data's principal axes and min-max
    scaled jointly, then a per-class KSG estimate is averaged with class-count
    weights. Classes with fewer than ``k + 2`` pairs are skipped.
    """
    xr, xg = _as_matrix(xr), _as_matrix(xg)
    if xr.shape != xg.shape:
        raise DataError("paired real and generated arrays differ in shape")
    codes = condition_labels(y, cfg.bins)
    pca = _fit_pca_capped(xr, cfg.q)
    zr, zg = pca.transform(xr), pca.transform(xg)
    both = np.vstack([zr, zg])
    zr, zg = minmax_normalize(zr, both), minmax_normalize(zg, both)
    total, weight = 0.0, 0
    for c in np.unique(codes):
        rows = np.flatnonzero(codes == c)
        if rows.size < ksg.k + 2:
            warnings.warn(f"class {c}: {rows.size} pairs < k + 2, excluded", EstimatorWarning)
            continue
        mi = ksg_mi(zr[rows], zg[rows], ksg, seed=derive_seed(seed, "cmi", int(c)), discrete=False)
        total += rows.size * mi
        weight += rows.size
    if weight == 0:
        raise InsufficientSamplesError("every class has fewer than k + 2 pairs")
    return total / weight


def contribution_ratio(cmi, h_cond, xi, eps=1e-10, rho_min=RHO_MIN):
    """Return ``(clamped, raw)`` for 1 - xi * I / (H + eps)."""
    raw = 1.0 - xi * cmi / (h_cond + eps)
    return min(1.0, max(rho_min, raw)), raw


@dataclass(frozen=True)
class RhoEstimate:
    rho: float
    rho_raw: float
    cmi: float
    h_cond: float
    xi: float
    param_count: int


def estimate_rho(xr, xg, y, gen, cfg=RhoConfig(), ksg=KsgConfig(), seed=0, h_cond=None):
    """Information contribution ratio with its intermediates.

    ``xr``/``xg``/``y`` are row-paired (see :func:`pair_samples`). ``h_cond``
    overrides H(Xr|Y), e.g. when computed on the unpaired real set.
    """
    from .generators import generator_complexity

    K, xi = generator_complexity(gen, cfg.tau)
    cmi = conditional_mi(xr, xg, y, cfg, ksg, seed)
    if h_cond is None:
        h_cond = conditional_entropy_binned(xr, y, cfg)
    rho, raw = contribution_ratio(cmi, h_cond, xi, cfg.eps, cfg.rho_min)
    return RhoEstimate(rho, raw, cmi, float(h_cond), xi, K)


def info_contribution_ratio(xr, xg, y, gen, cfg=RhoConfig(), ksg=KsgConfig(), seed=0):
    """Information contribution ratio in [rho_min, 1]."""
    return estimate_rho(xr, xg, y, gen, cfg, ksg, seed).rho


def gaussian_mi(r):
    """Analytic MI of a bivariate Gaussian with correlation ``r``."""
    return -0.5 * math.log(1.0 - r * r)
