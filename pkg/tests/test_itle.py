import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from augsize.dataset import split
from augsize.errors import DataError
from augsize.generators import GeneratorSpec
from augsize.infotheory import BootstrapConfig
from augsize.itle import (
    AlphaConfig,
    BinaryFanoDegenerate,
    BoundConfig,
    ItleConfig,
    alpha_correction,
    fano_floor,
    information_gap,
    invert_generalization_bound,
    itle_interval,
    round_half_up,
    run_itle,
)
from augsize.modeling import ModelProbes, ModelSpec
from augsize.report import dumps

from conftest import blobs

FAST = ItleConfig(boot=BootstrapConfig(n_boot=20), rademacher_M=5)


# -- Fano floor and gap ------------------------------------------------------

def test_fano_examples():
    assert fano_floor(math.log(3), math.log(3), 3) == 0.0
    assert fano_floor(math.log(3), 0.0, 3) == pytest.approx((math.log(3) - 1) / math.log(2), abs=1e-9)
    assert fano_floor(math.log(3), 0.0, 3) == pytest.approx(0.1423, abs=1e-4)
    assert fano_floor(2.0, 0.0, 5) == pytest.approx(0.7213, abs=1e-4)
    assert fano_floor(10.0, 0.0, 3) == 1.0


def test_fano_binary_falls_back_to_zero():
    with pytest.warns(BinaryFanoDegenerate):
        assert fano_floor(math.log(2), 0.0, 2) == 0.0
    with pytest.raises(DataError):
        fano_floor(0.0, 0.0, 1)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 3), st.floats(0, 3), st.integers(3, 20))
def test_fano_non_increasing_in_information(i1, i2, k):
    lo, hi = sorted((i1, i2))
    h = math.log(k) + 1.5
    assert fano_floor(h, lo, k) >= fano_floor(h, hi, k)


def test_information_gap_examples():
    assert information_gap(0.091, 0.059) == pytest.approx(0.032, abs=1e-12)
    assert information_gap(0.252, 0.059) == pytest.approx(0.193, abs=1e-12)
    assert information_gap(0.05, 0.059) == 0.0


# -- bound inversion ---------------------------------------------------------

def test_bound_inversion_examples():
    assert invert_generalization_bound(0.0) == pytest.approx(1664.4, abs=0.5)
    assert invert_generalization_bound(0.0, BoundConfig(delta=1.0)) == 0.0
    a = invert_generalization_bound(4.545, BoundConfig(gamma=0.03))
    b = invert_generalization_bound(4.545, BoundConfig(gamma=0.06))
    assert a == pytest.approx(4 * b, rel=1e-12)
    with pytest.raises(ValueError):
        BoundConfig(C=0)


# -- alpha -------------------------------------------------------------------

def test_alpha_examples():
    ab = alpha_correction([0.3, 0.3, 0.3], 3, spectral=1.0, kappa=5.0)
    assert ab.alpha_R == 1.0 and ab.alpha_opt == 1.0 and ab.alpha_loss == 1.0
    assert ab.alpha_bound == pytest.approx(1 + 0.1 * math.log(3), abs=1e-9)
    assert ab.alpha == pytest.approx(ab.alpha_R * ab.alpha_bound * ab.alpha_opt * ab.alpha_loss, abs=1e-9)
    assert alpha_correction([0.1, 0.2], 3, 100.0, 1.0, "mse").alpha_opt == 3.0
    assert alpha_correction([0.1, 0.2], 3, 100.0, 1.0, "mse").alpha_loss == 1.1
    with pytest.raises(DataError):
        alpha_correction([0.3], 3, 1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=30), st.integers(2, 50),
       st.floats(0, 100), st.floats(0, 50))
def test_alpha_components_bounded(reps, k, spectral, kappa):
    ab = alpha_correction(reps, k, spectral, kappa, cfg=AlphaConfig())
    for v in (ab.alpha_R, ab.alpha_bound, ab.alpha_opt, ab.alpha_loss):
        assert 1.0 <= v <= 3.0
    assert 1.0 <= ab.alpha <= 81.0


# -- interval ----------------------------------------------------------------

def test_interval_examples():
    iv = itle_interval(0.062, 552, 198, 1.5, 1.0)
    assert (iv.lower, iv.upper) == (354, 531) and not iv.saturated
    assert abs(iv.upper - 530) <= 1
    zero = itle_interval(0.0, 5000, 198, 1.5, 1.0)
    assert (zero.lower, zero.upper, zero.saturated) == (0, 0, True)
    clamp = itle_interval(0.123, 150, 198, 1.5, 0.5)
    assert (clamp.lower, clamp.upper, clamp.saturated) == (0, 0, True)


def test_round_half_up():
    assert [round_half_up(v) for v in (0.5, 1.5, 2.5, 2.4999)] == [1, 2, 3, 2]


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1), st.floats(0, 1e5), st.integers(1, 5000), st.floats(1, 81),
       st.floats(1e-3, 1), st.floats(1e-3, 1))
def test_interval_ordering_and_rho_monotonicity(bias, n_eff, n_train, alpha, r1, r2):
    lo_rho, hi_rho = sorted((r1, r2))
    a = itle_interval(bias, n_eff, n_train, alpha, hi_rho)
    b = itle_interval(bias, n_eff, n_train, alpha, lo_rho)
    assert 0 <= a.lower <= a.upper and 0 <= b.lower <= b.upper
    assert b.lower >= a.lower and b.upper >= a.upper
    assert a.saturated == ((a.lower, a.upper) == (0, 0))
    if n_eff + 0.5 <= n_train:
        assert (a.lower, a.upper) == (0, 0)


# -- end to end --------------------------------------------------------------

def test_run_itle_strong_model_is_saturated():
    ds = blobs(n_per_class=50, centers=((0, 0), (8, 0), (0, 8)), scale=0.4, seed=2)
    sp = split(ds, test_fraction=0.3, seed=0)
    rep = run_itle(sp, ModelSpec("linear-logistic", lr=0.05), GeneratorSpec("class-gaussian"), cfg=FAST)
    assert rep.e_test <= rep.pe_lb or rep.Bias == 0.0
    assert rep.OSS == [0, 0] and rep.saturated


def test_run_itle_weak_model_asks_for_data():
    ds = blobs(n_per_class=40, centers=((0, 0), (1, 0), (0, 1)), scale=1.0, seed=5)
    sp = split(ds, test_fraction=0.3, seed=0)
    weak = ModelSpec("linear-logistic", l2=5.0, max_epochs=30)
    rep = run_itle(sp, weak, GeneratorSpec("class-gaussian"), cfg=FAST, seed=1)
    assert rep.Bias > 0 and rep.OSS[0] > 0 and rep.OSS[0] <= rep.OSS[1]
    assert rep.alpha == pytest.approx(np.prod(list(rep.alpha_breakdown.values())), rel=1e-12)
    assert rep.kappa_emp == pytest.approx(rep.R_hat * math.sqrt(sp.pool.n_samples), rel=1e-12)


def test_run_itle_deterministic_report(blob_split):
    spec = ModelSpec("linear-logistic", max_epochs=20)
    a = run_itle(blob_split, spec, GeneratorSpec("jitter"), cfg=FAST, seed=3)
    b = run_itle(blob_split, spec, GeneratorSpec("jitter"), cfg=FAST, seed=3)
    assert dumps(a.to_dict()) == dumps(b.to_dict())
    assert set(json.loads(dumps(a.to_dict()))) >= {"I_lb", "H_Y", "pe_lb", "e_test", "Bias", "R_hat",
                                                    "kappa_emp", "n_eff", "N_c", "alpha", "rho", "OSS"}


def test_run_itle_from_probes(blob_split):
    probes = ModelProbes("classification", n_train=blob_split.pool.n_samples, test_error=0.3,
                         rademacher=0.2, rademacher_replicates=(0.18, 0.22), spectral=1.0)
    rep = run_itle(blob_split, probes, GeneratorSpec("jitter"), cfg=FAST)
    assert rep.e_test == 0.3 and rep.R_hat == 0.2 and rep.rademacher_replicates == [0.18, 0.22]


def test_run_itle_rejects_regression(reg_split):
    with pytest.raises(DataError):
        run_itle(reg_split, ModelSpec("mlp"), GeneratorSpec("jitter"))
