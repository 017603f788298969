import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from augsize.dataset import REGRESSION, Dataset, split
from augsize.errors import DataError
from augsize.generators import GeneratorSpec
from augsize.mgee import (
    CeilingHit,
    MgeeConfig,
    MgeeRunConfig,
    beta_correction,
    curve_samples,
    derivative_g,
    effective_sample_size,
    generalization_value,
    mgee_interval,
    run_mgee,
    saturation_ratio,
    saturation_ratio_grid,
)
from augsize.modeling import ModelProbes, ModelSpec
from augsize.report import dumps

FAST = MgeeRunConfig(mgee=MgeeConfig(repeats=2))


def reg_probes(pac_bayes, n_train=70, repeats=()):
    return ModelProbes(REGRESSION, n_train=n_train, mape=0.1, pac_bayes=pac_bayes, param_count=10,
                       error_repeats=repeats)


# -- effective size and curve ------------------------------------------------

def test_effective_size_examples():
    assert effective_sample_size(0, 0.3, 70) == 70
    assert effective_sample_size(2.5, 1.0, 70) == pytest.approx(70 * 3.5, abs=1e-12)
    assert effective_sample_size(2, 0.109, 70) == pytest.approx(75.49, abs=0.01)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 1), st.floats(0, 1), st.integers(1, 10_000))
def test_effective_size_bounds_and_monotonicity(a1, a2, r1, r2, n):
    lo_a, hi_a = sorted((a1, a2))
    lo_r, hi_r = sorted((r1, r2))
    e = effective_sample_size(lo_a, lo_r, n)
    assert n * (1 - 1e-12) <= e <= n * (1 + lo_a) * (1 + 1e-12)
    assert effective_sample_size(hi_a, lo_r, n) >= e * (1 - 1e-12)
    assert effective_sample_size(lo_a, hi_r, n) >= e * (1 - 1e-12)


def test_generalization_examples():
    assert generalization_value(0.0, 70) == 0.0
    assert generalization_value(9.729, 70) == pytest.approx(0.3728, abs=1e-4)
    assert generalization_value(5.0, 400) == pytest.approx(generalization_value(5.0, 100) / 2, rel=1e-15)
    with pytest.raises(DataError):
        generalization_value(1.0, 0)


def test_derivative_examples():
    assert all(derivative_g(a, 5.0, 0.0, 70) == 0.0 for a in (0, 1, 10))
    assert derivative_g(0.0, 70.0, 1.0, 70) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("a", [0.0, 0.5, 1.0, 5.0, 20.0])
@pytest.mark.parametrize("rho", [0.1, 0.5, 0.9])
def test_derivative_matches_finite_difference(a, rho):
    pac, n, h = 9.729, 70, 1e-6

    def G(x):
        return generalization_value(pac, effective_sample_size(x, rho, n))

    fd = (G(a - h) - G(a + h)) / (2 * h)
    assert derivative_g(a, pac, rho, n) == pytest.approx(fd, rel=1e-6)
    assert G(a + 1) <= G(a)


# -- saturation ratio --------------------------------------------------------

def test_saturation_small_complexity_is_zero():
    assert saturation_ratio(0.022, 0.109, 70) == 0.0
    assert saturation_ratio(0.001, 0.109, 70) == 0.0


def test_saturation_increasing_in_complexity():
    a = [saturation_ratio(p, 0.109, 70) for p in (9.729, 14.977, 21.377, 75.521)]
    assert all(x < y for x, y in zip(a, a[1:]))
    assert a == pytest.approx([3.659, 4.211, 4.661, 6.767], rel=0.02)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 200), st.floats(0.01, 1), st.integers(10, 2000))
def test_bisection_matches_dense_grid(pac, rho, n):
    cfg = MgeeConfig(step=1e-4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CeilingHit)
        bis = saturation_ratio(pac, rho, n, cfg)
    grid = saturation_ratio_grid(pac, rho, n, cfg.iota, cfg.a_max, 1e-4)
    assert abs(bis - grid) <= 1e-4 + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 100), st.floats(0.01, 1), st.floats(0.01, 1), st.floats(1e-4, 1e-2),
       st.floats(1e-4, 1e-2))
def test_saturation_monotone_in_iota_and_rho(pac, r1, r2, i1, i2):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CeilingHit)
        lo_r, hi_r = sorted((r1, r2))
        lo_i, hi_i = sorted((i1, i2))
        cfg_lo, cfg_hi = MgeeConfig(iota=lo_i, step=1e-6), MgeeConfig(iota=hi_i, step=1e-6)
        assert saturation_ratio(pac, hi_r, 70, cfg_lo) >= saturation_ratio(pac, hi_r, 70, cfg_hi) - 1e-6
        # a larger redundant share (smaller rho) flattens the curve sooner
        assert saturation_ratio(pac, lo_r, 70, cfg_lo) <= saturation_ratio(pac, hi_r, 70, cfg_lo) + 1e-6


def test_saturation_ceiling_warns():
    with pytest.warns(CeilingHit):
        assert saturation_ratio(1e6, 1.0, 10, MgeeConfig(a_max=5.0)) == 5.0


# -- beta and interval -------------------------------------------------------

def test_beta_examples():
    assert beta_correction(0.0, 10, 0.0, [1.0, 1.0, 1.0]).beta == 1.0
    assert beta_correction(0.0, 10, 1.0, [1.0, 1.0]).beta_rho == 1.25
    assert beta_correction(0.0, 10, 0.0, [1.0, 1.0, 1.2]).beta_emp == pytest.approx(1.0442, abs=1e-4)
    with pytest.warns(UserWarning):
        assert beta_correction(0.0, 10, 0.0, []).beta_emp == 1.0
    with pytest.raises(DataError):
        beta_correction(0.0, 10, 0.0, [1.0])
    with pytest.raises(DataError):
        beta_correction(0.0, 0, 0.0, [1.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e4), st.integers(1, 10_000), st.floats(0, 1),
       st.lists(st.floats(1e-3, 10), min_size=2, max_size=8))
def test_beta_bounded(pac, k, rho, errs):
    b = beta_correction(pac, k, rho, errs, MgeeConfig(c1=5, c2=5, c3=5))
    assert 1.0 <= b.beta <= 8.0


def test_interval_examples():
    assert mgee_interval(70, 3.659, 1.225) == (256, 314)
    assert mgee_interval(70, 6.767, 1.219) == (474, 578)
    assert mgee_interval(70, 0.0, 1.3) == (0, 0)


def test_interval_scales_with_pool():
    n_r, _ = mgee_interval(70, 2.0, 1.2)
    n_r2, _ = mgee_interval(140, 2.0, 1.2)
    assert n_r2 == 2 * n_r


def test_curve_samples_shape():
    curve = curve_samples(9.729, 0.109, 70, MgeeConfig(curve_points=10))
    assert len(curve) == 10 and curve[0][0] == 0.0
    Gs = [c[1] for c in curve]
    assert all(x >= y for x, y in zip(Gs, Gs[1:]))


# -- end to end --------------------------------------------------------------

def linear_split():
    rng = np.random.default_rng(0)
    X = rng.uniform(1, 2, size=(100, 2))
    y = 2 + X @ np.array([1.0, -0.5]) + rng.normal(0, 1e-3, 100)
    return split(Dataset(X, y, REGRESSION), test_fraction=0.3, seed=0)


def test_run_mgee_saturated_via_probes():
    sp = linear_split()
    rep = run_mgee(sp, reg_probes(1e-3, n_train=sp.pool.n_samples, repeats=(0.01, 0.011)),
                   GeneratorSpec("jitter"), cfg=FAST)
    assert rep.OSS == [0, 0] and rep.a_star == 0.0


def test_run_mgee_mlp_requests_data(reg_split):
    spec = ModelSpec("mlp", hidden=(8,), max_epochs=60)
    cfg = MgeeRunConfig(mgee=MgeeConfig(repeats=2, iota=1e-2))
    rep = run_mgee(reg_split, spec, GeneratorSpec("jitter", {"sigma": 0.2}), cfg=cfg, seed=1)
    assert rep.a_star > 0 and rep.OSS[0] > 0 and rep.OSS[0] <= rep.OSS[1]
    assert len(rep.errors) == 2 and rep.beta >= 1
    b = run_mgee(reg_split, spec, GeneratorSpec("jitter", {"sigma": 0.2}), cfg=cfg, seed=1)
    assert dumps(rep.to_dict()) == dumps(b.to_dict())


def test_run_mgee_rejects_classification(blob_split):
    with pytest.raises(DataError):
        run_mgee(blob_split, ModelSpec("mlp"), GeneratorSpec("jitter"))
