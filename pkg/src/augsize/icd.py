"""Interval coverage and deviation (ICD) score of a budget interval against a ground truth."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError
from .itle import round_half_up


@dataclass(frozen=True)
class IcdScore:
    cov: int
    dev: float
    n_true: int
    q: int

    @property
    def dev_percent(self):
        return 100.0 * self.dev

    def to_dict(self):
        return {"icd_cov": self.cov, "icd_dev": self.dev, "n_true": self.n_true, "q": self.q}


def reference_quantile(n):
    """Power of ten nearest to ``n`` on a log scale (exponent rounded half-up)."""
    if n < 1:
        raise DataError("sample size must be >= 1")
    return 10 ** round_half_up(math.log10(n))


def snap_true(n_raw, q):
    """Nearest non-negative multiple of ``q``; halfway values round up."""
    if q < 1:
        raise DataError("q must be >= 1")
    if n_raw < 0:
        raise DataError("ground truth must be >= 0")
    return int(q * ((2 * int(n_raw) + q) // (2 * q)))


def icd_score(interval, n_true, q):
    """Coverage bit and midpoint deviation; the deviation is a fraction of ``n_true``.

    When ``n_true`` is 0 the deviation is measured against ``q / 10`` instead.
    """
    lower, upper = (int(v) for v in interval)
    if lower < 0 or upper < lower:
        raise DataError(f"invalid interval [{lower}, {upper}]")
    if n_true < 0:
        raise DataError("n_true must be >= 0")
    cov = int(lower <= n_true <= upper)
    denom = n_true if n_true > 0 else q / 10.0
    dev = abs(0.5 * (lower + upper) - n_true) / denom
    return IcdScore(cov, dev, int(n_true), int(q))


def score_against_raw(interval, n_raw, n_train):
    """Snap a raw optimum with the quantile of ``n_train`` and score ``interval``."""
    q = reference_quantile(n_train)
    return icd_score(interval, snap_true(n_raw, q), q)
