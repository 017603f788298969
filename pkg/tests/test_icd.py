import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from augsize.errors import DataError
from augsize.icd import icd_score, reference_quantile, score_against_raw, snap_true

# (interval, n_true, cov, dev percent to two decimals)
REFERENCE_SCORES = [
    ((0, 0), 0, 1, 0.0),
    ((354, 530), 500, 1, 11.60),
    ((273, 333), 300, 1, 1.00),
    ((0, 0), 0, 1, 0.0),
    ((84, 124), 100, 1, 4.00),
    ((138, 168), 100, 0, 53.00),
    ((0, 0), 0, 1, 0.0),
    ((0, 0), 0, 1, 0.0),
    ((256, 314), 200, 0, 42.50),
    ((295, 365), 300, 1, 10.00),
    ((326, 399), 300, 0, 20.83),
    ((474, 578), 400, 0, 31.50),
]


def test_reference_quantile_examples():
    assert reference_quantile(198) == 100
    assert reference_quantile(70) == 100
    assert reference_quantile(1000) == 1000
    assert reference_quantile(1) == 1
    with pytest.raises(DataError):
        reference_quantile(0)


def test_snap_examples():
    assert snap_true(480, 100) == 500
    assert snap_true(150, 100) == 200
    assert snap_true(149, 100) == 100
    assert snap_true(0, 100) == 0


@pytest.mark.parametrize("interval,n_true,cov,dev_pct", REFERENCE_SCORES)
def test_reference_scores(interval, n_true, cov, dev_pct):
    s = icd_score(interval, n_true, 100)
    assert s.cov == cov
    assert round(s.dev_percent, 2) == pytest.approx(dev_pct, abs=1e-9)


def test_score_report_keys():
    s = score_against_raw((354, 530), 480, 198)
    assert s.to_dict() == {"icd_cov": 1, "icd_dev": pytest.approx(0.116), "n_true": 500, "q": 100}


def test_invalid_intervals():
    with pytest.raises(DataError):
        icd_score((5, 3), 0, 100)
    with pytest.raises(DataError):
        icd_score((-1, 3), 0, 100)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 5000), st.integers(0, 5000), st.integers(0, 50))
def test_dev_depends_on_midpoint_only(a, w, k):
    n_true = 100 * k
    lo, hi = a, a + 2 * w
    mid = (lo + hi) // 2
    assert icd_score((lo, hi), n_true, 100).dev == icd_score((mid, mid), n_true, 100).dev


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 5000), st.integers(0, 5000), st.integers(0, 50))
def test_scaling_by_ten_preserves_dev(lo, w, k):
    a = icd_score((lo, lo + w), 100 * k, 100)
    b = icd_score((10 * lo, 10 * (lo + w)), 1000 * k, 1000)
    assert a.dev == pytest.approx(b.dev, rel=1e-12, abs=1e-15)
    assert a.cov == b.cov


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100))
def test_degenerate_exact_hit(k):
    s = icd_score((100 * k, 100 * k), 100 * k, 100)
    assert (s.cov, s.dev) == (1, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1, 10, 100, 1000]))
def test_snap_is_nearest_multiple(n, q):
    s = snap_true(n, q)
    assert s % q == 0 and abs(s - n) <= q / 2
