"""Synthetic feature generation, CSV round trips, dataset statistics."""

import math

import numpy as np
import pytest

from efcilab.datagen import (
    DatasetError,
    FeatureDataset,
    SynthSpec,
    dataset_stats,
    load_features,
    save_features,
    synth_features,
)


def batch_lda_accuracy(ds) -> float:
    """Independent batch-LDA oracle: fit on train, score on test."""
    x, y = ds.train_arrays()
    ids = np.unique(y)
    mu = np.stack([x[y == c].mean(axis=0) for c in ids])
    centered = x - mu[np.searchsorted(ids, y)]
    sigma = centered.T @ centered / len(y)
    lam = np.linalg.inv(0.999 * sigma + 0.001 * np.eye(ds.dim))
    w = mu @ lam
    b = -0.5 * np.einsum("ij,ij->i", w, mu)
    tx, ty = ds.test_arrays()
    pred = ids[np.argmax(tx @ w.T + b, axis=1)]
    return float((pred == ty).mean())


def test_high_separation_is_perfectly_classifiable():
    ds = synth_features(SynthSpec(n_classes=4, dim=8, n_train=50, n_test=25, separation=10.0, seed=1))
    assert batch_lda_accuracy(ds) == 1.0


def test_zero_separation_gives_chance_accuracy():
    ds = synth_features(SynthSpec(n_classes=4, dim=8, n_train=100, n_test=100, separation=0.0, seed=2))
    acc = batch_lda_accuracy(ds)
    assert abs(acc - 0.25) < 0.1


def test_pairwise_mean_distances_match_separation():
    spec = SynthSpec(n_classes=5, dim=12, n_train=400, n_test=5, separation=3.0, seed=3)
    ds = synth_features(spec)
    x, y = ds.train_arrays()
    mu = np.stack([x[y == c].mean(axis=0) for c in range(5)])
    for i in range(5):
        for j in range(i + 1, 5):
            assert abs(np.linalg.norm(mu[i] - mu[j]) - 3.0) < 0.35


def test_class_means_converge_componentwise():
    # componentwise |mu_hat - mu| <= 5/sqrt(n_train), over several seeds
    for seed in range(10):
        spec = SynthSpec(n_classes=3, dim=6, n_train=64, n_test=2, separation=2.0, seed=seed)
        ds = synth_features(spec)
        rng = np.random.default_rng(seed)
        from efcilab.datagen import class_means_frame

        means, _ = class_means_frame(3, 6, 2.0, rng)
        x, y = ds.train_arrays()
        bound = 5.0 / math.sqrt(64)
        for c in range(3):
            emp = x[y == c].mean(axis=0)
            assert np.all(np.abs(emp - means[c]) <= bound)


def test_more_classes_than_dims_uses_random_placement():
    ds = synth_features(SynthSpec(n_classes=10, dim=4, n_train=3, n_test=2, separation=5.0, seed=0))
    assert ds.meta["mean_placement"] == "random-directions"
    ds2 = synth_features(SynthSpec(n_classes=4, dim=4, n_train=3, n_test=2, separation=5.0, seed=0))
    assert ds2.meta["mean_placement"] == "orthonormal-frame"


def test_anisotropy_stretches_noise_per_dimension():
    iso = SynthSpec(n_classes=2, dim=4, n_train=4000, n_test=2, separation=0.0, seed=4)
    stretched = SynthSpec(
        n_classes=2, dim=4, n_train=4000, n_test=2, separation=0.0, seed=4, anisotropy=2.0
    )
    x_iso, y_iso = synth_features(iso).train_arrays()
    x_an, y_an = synth_features(stretched).train_arrays()
    stds_iso = x_iso[y_iso == 0].std(axis=0)
    stds_an = x_an[y_an == 0].std(axis=0)
    assert np.allclose(stds_iso, 1.0, atol=0.08)
    assert np.allclose(stds_an, np.linspace(1.0, 3.0, 4), atol=0.15)
    with pytest.raises(DatasetError, match="anisotropy"):
        SynthSpec(
            n_classes=2, dim=4, n_train=1, n_test=1, separation=1.0, anisotropy=-1.0
        ).validate()


def test_same_seed_same_bytes(tmp_path):
    spec = SynthSpec(n_classes=3, dim=5, n_train=4, n_test=2, separation=1.0, seed=42)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    save_features(synth_features(spec), a)
    save_features(synth_features(spec), b)
    assert a.read_bytes() == b.read_bytes()


def test_invalid_spec_errors():
    with pytest.raises(DatasetError, match="dim"):
        SynthSpec(n_classes=3, dim=0, n_train=1, n_test=1, separation=1.0).validate()
    with pytest.raises(DatasetError, match="2 classes"):
        SynthSpec(n_classes=1, dim=4, n_train=1, n_test=1, separation=1.0).validate()
    with pytest.raises(DatasetError, match="separation"):
        SynthSpec(n_classes=3, dim=4, n_train=1, n_test=1, separation=-0.5).validate()


def test_csv_round_trip(tmp_path):
    ds = synth_features(SynthSpec(n_classes=3, dim=4, n_train=5, n_test=2, separation=2.0, seed=9))
    path = tmp_path / "feat.csv"
    save_features(ds, path)
    back = load_features(path, name=ds.name)
    assert back.dim == ds.dim
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)
    assert np.array_equal(back.is_train, ds.is_train)


def test_load_small_file(tmp_path):
    path = tmp_path / "tiny.csv"
    path.write_text("label,split,f0,f1\n0,train,1.5,2.0\n0,test,0.5,1.0\n1,train,3.0,4.0\n1,test,2.5,3.5\n")
    ds = load_features(path)
    assert ds.dim == 2
    assert ds.n_samples == 4
    assert ds.labels.tolist() == [0, 0, 1, 1]


def test_load_errors_carry_line_numbers(tmp_path):
    nan_file = tmp_path / "nan.csv"
    nan_file.write_text("label,split,f0,f1\n0,train,1.0,nan\n0,test,0.5,1.0\n")
    with pytest.raises(DatasetError, match=r"nan\.csv:2: non-finite"):
        load_features(nan_file)

    ragged = tmp_path / "ragged.csv"
    ragged.write_text("label,split,f0,f1\n0,train,1.0\n")
    with pytest.raises(DatasetError, match=r"ragged\.csv:2: expected 4 fields"):
        load_features(ragged)

    bad_split = tmp_path / "split.csv"
    bad_split.write_text("label,split,f0,f1\n0,validate,1.0,2.0\n")
    with pytest.raises(DatasetError, match=r"split\.csv:2: split"):
        load_features(bad_split)

    missing = tmp_path / "missing.csv"
    missing.write_text("label,split,f0,f1\n0,train,1.0,2.0\n1,train,0.5,1.0\n1,test,0.5,1.0\n")
    with pytest.raises(DatasetError, match="class 0 lacks"):
        load_features(missing)


def test_dataset_stats_balanced():
    ds = synth_features(SynthSpec(n_classes=4, dim=3, n_train=250, n_test=50, separation=1.0, seed=0))
    stats = dataset_stats(ds)
    assert stats.n_mean == 250.0
    assert stats.sigma_train == 0.0
    assert stats.mu_test == 50.0
    assert stats.sigma_test == 0.0
    assert stats.small is False and stats.width == 0.0


def test_dataset_stats_single_class():
    features = np.arange(12, dtype=float).reshape(6, 2)
    ds = FeatureDataset(
        name="one",
        features=features,
        labels=np.zeros(6, dtype=np.int64),
        is_train=np.array([True] * 5 + [False]),
    )
    stats = dataset_stats(ds)
    assert stats.n_mean == 5.0 and stats.sigma_train == 0.0


def test_dataset_stats_population_std():
    # train counts {10, 20} -> mean 15, population std 5
    labels = np.array([0] * 12 + [1] * 22, dtype=np.int64)
    is_train = np.array([True] * 10 + [False] * 2 + [True] * 20 + [False] * 2)
    features = np.zeros((34, 2))
    ds = FeatureDataset(name="two", features=features, labels=labels, is_train=is_train)
    stats = dataset_stats(ds)
    assert stats.n_mean == 15.0
    assert stats.sigma_train == 5.0


def test_stats_sigma_zero_iff_balanced():
    labels = np.array([0] * 4 + [1] * 5, dtype=np.int64)
    is_train = np.array([True, True, True, False, True, True, True, True, False])
    ds = FeatureDataset(name="x", features=np.zeros((9, 1)), labels=labels, is_train=is_train)
    assert dataset_stats(ds).sigma_train > 0.0
