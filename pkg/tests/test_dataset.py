import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from augsize.dataset import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    SplitDataset,
    fit_pca,
    load_table,
    minmax_normalize,
    save_table,
    split,
)
from augsize.errors import (
    ClassAbsentError,
    EmptyInputError,
    EmptyPartitionError,
    InsufficientSamplesError,
    MissingFileError,
    ParseError,
    RaggedRowError,
    UnknownColumnError,
)

from conftest import blobs, write_csv


def test_load_297_rows_ten_features_three_classes(tmp_path):
    rng = np.random.default_rng(0)
    rows = [list(rng.normal(size=10)) + [f"class{i % 3}"] for i in range(297)]
    path = write_csv(tmp_path / "d.csv", [f"f{j}" for j in range(10)] + ["label"], rows)
    ds = load_table(path, label="label")
    assert (ds.n_samples, ds.n_features, ds.n_classes) == (297, 10, 3)
    assert ds.feature_names == tuple(f"f{j}" for j in range(10))


def test_labels_recoded_by_first_appearance(tmp_path):
    path = write_csv(tmp_path / "d.csv", None, [[1, "z"], [2, "a"], [3, "z"], [4, "m"]])
    ds = load_table(path, header=False)
    assert ds.labels.tolist() == [0, 1, 0, 2]
    assert ds.classes == ("z", "a", "m")


def test_label_by_index_and_regression(tmp_path):
    path = write_csv(tmp_path / "d.csv", ["y", "x"], [[1.5, 0], [2.5, 1], [3.5, 2]])
    ds = load_table(path, label=0, task=REGRESSION)
    assert ds.labels.tolist() == [1.5, 2.5, 3.5]
    assert ds.features[:, 0].tolist() == [0, 1, 2]


def test_empty_file(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("")
    with pytest.raises(EmptyInputError):
        load_table(path)


def test_parse_error_names_row(tmp_path):
    rows = [[float(i), "a" if i % 2 else "b"] for i in range(8)]
    rows[4][0] = "abc"
    path = write_csv(tmp_path / "d.csv", ["x", "y"], rows)
    with pytest.raises(ParseError) as info:
        load_table(path)
    assert info.value.row == 5


def test_missing_ragged_unknown(tmp_path):
    with pytest.raises(MissingFileError):
        load_table(tmp_path / "nope.csv")
    path = write_csv(tmp_path / "r.csv", ["x", "y"], [[1, "a"], [2, "b", 3]])
    with pytest.raises(RaggedRowError):
        load_table(path)
    path = write_csv(tmp_path / "u.csv", ["x", "y"], [[1, "a"], [2, "b"]])
    with pytest.raises(UnknownColumnError):
        load_table(path, label="cls")


def test_save_load_roundtrip(tmp_path):
    ds = blobs(n_per_class=5)
    save_table(ds, tmp_path / "o.csv")
    back = load_table(tmp_path / "o.csv", label="label")
    np.testing.assert_array_equal(back.features, ds.features)
    assert [back.classes[c] for c in back.labels] == [ds.classes[c] for c in ds.labels]


def test_split_sizes_for_198_pool():
    ds = blobs(n_per_class=66)
    test = blobs(n_per_class=10, seed=1)
    sp = split(ds, test=test, seed=0)
    assert sp.sizes == {"n_train": 154, "n_val": 44, "n_test": 30, "n_pool": 198}


def test_split_deterministic_and_disjoint():
    ds = blobs()
    a, b = split(ds, test_fraction=0.3, seed=4), split(ds, test_fraction=0.3, seed=4)
    for name in ("train_idx", "val_idx", "test_idx"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    sets = [set(a.train_idx), set(a.val_idx), set(a.test_idx)]
    assert not (sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2])
    assert set().union(*sets) <= set(range(ds.n_samples))


def test_split_errors():
    ds = blobs()
    with pytest.raises(EmptyPartitionError):
        split(ds, test_fraction=0.0)
    tiny = Dataset(np.arange(12.0)[:, None], [0] * 11 + [1], CLASSIFICATION)
    with pytest.raises((ClassAbsentError, InsufficientSamplesError)):
        split(tiny, test_fraction=0.25, seed=0)


def test_split_manifest_roundtrip(tmp_path):
    ds = blobs()
    sp = split(ds, test_fraction=0.3, seed=2)
    sp.save_manifest(tmp_path / "m.json")
    back = SplitDataset.from_manifest(ds, json.loads((tmp_path / "m.json").read_text()))
    np.testing.assert_array_equal(back.test_idx, sp.test_idx)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(8, 40), st.integers(0, 2**32 - 1))
def test_stratification_within_one_sample(n_classes, per_class, seed):
    y = np.repeat(np.arange(n_classes), per_class)
    ds = Dataset(np.random.default_rng(seed).normal(size=(y.size, 2)), y, CLASSIFICATION)
    sp = split(ds, test_fraction=0.2, seed=seed)
    pool = sp.pool_idx
    frac = sp.train_idx.size / pool.size
    for c in range(n_classes):
        in_pool = np.sum(ds.labels[pool] == c)
        in_train = np.sum(ds.labels[sp.train_idx] == c)
        assert abs(in_train - frac * in_pool) <= 1 + 1e-9


# -- PCA ---------------------------------------------------------------------

def test_pca_rank_one():
    t = np.linspace(-1, 1, 50)[:, None]
    X = t * np.array([[1.0, 2.0, -2.0]])
    assert fit_pca(X, 1).explained_variance_ratio[0] >= 1 - 1e-8


def test_pca_full_basis_sums_to_one_and_preserves_distances():
    X = np.random.default_rng(1).normal(size=(40, 5))
    pca = fit_pca(X, 5)
    assert abs(pca.explained_variance_ratio.sum() - 1) <= 1e-8
    Z = pca.transform(X)
    d = lambda A: np.linalg.norm(A[:, None] - A[None], axis=-1)
    np.testing.assert_allclose(d(Z), d(X), atol=1e-8)
    np.testing.assert_allclose(pca.components @ pca.components.T, np.eye(5), atol=1e-8)


def test_pca_matches_svd_oracle():
    X = np.random.default_rng(2).normal(size=(100, 10)) @ np.diag(np.linspace(3, 0.5, 10))
    pca = fit_pca(X, 3)
    Xc = X - X.mean(axis=0)
    _, _, Vt = np.linalg.svd(Xc, full_matrices=False)
    for comp, ref in zip(pca.components, Vt[:3]):
        ref = ref * np.sign(ref[np.argmax(np.abs(ref))])
        np.testing.assert_allclose(comp, ref, atol=1e-6)
    for comp in pca.components:
        assert comp[np.argmax(np.abs(comp))] > 0


def test_pca_zero_variance_and_range():
    pca = fit_pca(np.ones((5, 3)), 2)
    np.testing.assert_allclose(pca.eigenvalues, 0, atol=1e-12)
    with pytest.raises(Exception):
        fit_pca(np.ones((5, 3)), 4)


# -- min-max -----------------------------------------------------------------

def test_minmax_examples():
    out = minmax_normalize(np.array([[2.0, 5.0, 0.0], [4.0, 5.0, 0.5], [6.0, 5.0, 1.0]]))
    np.testing.assert_allclose(out[:, 0], [0, 0.5, 1])
    np.testing.assert_allclose(out[:, 1], [0, 0, 0])
    np.testing.assert_allclose(out[:, 2], [0, 0.5, 1])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(1, 4)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_minmax_unit_range_and_idempotent(X):
    once = minmax_normalize(X)
    assert np.all(once >= 0) and np.all(once <= 1)
    np.testing.assert_allclose(minmax_normalize(once), once, atol=1e-9)
