"""Feature datasets: synthetic Gaussian class clusters and CSV ingestion.

Synthetic datasets stand in for backbone embeddings. Class means sit on a
scaled random orthonormal frame so that every pair of means is exactly
``separation`` apart (in within-class standard deviations); within-class
noise is isotropic unit Gaussian. When there are more classes than
dimensions an exact frame is impossible and means fall back to random
directions with matching expected spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_SEED_MASK = (1 << 64) - 1

CSV_SPLITS = ("train", "test")


class DatasetError(ValueError):
    """Raised for malformed feature files or invalid dataset contents."""


@dataclass
class FeatureDataset:
    """Labeled feature vectors with a train/test split."""

    name: str
    features: np.ndarray  # (n, dim) float64
    labels: np.ndarray  # (n,) int64
    is_train: np.ndarray  # (n,) bool
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def class_ids(self) -> np.ndarray:
        return np.unique(self.labels)

    def train_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self.features[self.is_train], self.labels[self.is_train]

    def test_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self.features[~self.is_train], self.labels[~self.is_train]

    def validate(self) -> None:
        if self.features.ndim != 2 or self.features.shape[1] < 1:
            raise DatasetError("features must be a non-empty 2-D array")
        if not np.all(np.isfinite(self.features)):
            raise DatasetError("features contain non-finite values")
        if self.labels.shape != (self.n_samples,) or self.is_train.shape != (self.n_samples,):
            raise DatasetError("labels/split arrays do not match the sample count")
        for c in self.class_ids:
            mask = self.labels == c
            if not np.any(mask & self.is_train) or not np.any(mask & ~self.is_train):
                raise DatasetError(f"class {int(c)} lacks a train or test sample")


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic dataset.

    ``anisotropy`` stretches the within-class noise: per-dimension standard
    deviations run linearly from 1 to 1 + anisotropy. Zero (the default)
    keeps the isotropic unit noise the analytical oracles assume.
    """

    n_classes: int
    dim: int
    n_train: int
    n_test: int
    separation: float
    strategy_tag: str = ""
    seed: int = 0
    name: str = "synthetic"
    anisotropy: float = 0.0

    def validate(self) -> None:
        if self.n_classes < 2:
            raise DatasetError(f"need at least 2 classes, got {self.n_classes}")
        if self.dim < 1:
            raise DatasetError(f"dim must be positive, got {self.dim}")
        if self.n_train < 1 or self.n_test < 1:
            raise DatasetError("per-class train and test counts must be >= 1")
        if self.separation < 0:
            raise DatasetError(f"separation must be >= 0, got {self.separation}")
        if self.anisotropy < 0:
            raise DatasetError(f"anisotropy must be >= 0, got {self.anisotropy}")


@dataclass(frozen=True)
class DatasetStats:
    """Per-class sample-count summary plus carried image metadata."""

    n_classes: int
    n_mean: float  # mean train samples per class
    sigma_train: float
    mu_test: float
    sigma_test: float
    small: bool
    width: float


def class_means_frame(n_classes: int, dim: int, separation: float, rng) -> tuple[np.ndarray, str]:
    """Means with pairwise distance ``separation``; exact when n_classes <= dim."""
    if n_classes <= dim:
        gauss = rng.standard_normal((dim, n_classes))
        q, _ = np.linalg.qr(gauss)
        means = (separation / math.sqrt(2.0)) * q.T
        placement = "orthonormal-frame"
    else:
        # Too many classes for an orthonormal frame: random unit directions,
        # same scaling, so the expected pairwise distance matches.
        raw = rng.standard_normal((n_classes, dim))
        means = (separation / math.sqrt(2.0)) * raw / np.linalg.norm(raw, axis=1, keepdims=True)
        placement = "random-directions"
    return means, placement


def synth_features(spec: SynthSpec) -> FeatureDataset:
    """Draw a dataset per ``spec``; deterministic in ``spec.seed``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed & _SEED_MASK)
    means, placement = class_means_frame(spec.n_classes, spec.dim, spec.separation, rng)

    noise_scale = np.linspace(1.0, 1.0 + spec.anisotropy, spec.dim)
    per_class = spec.n_train + spec.n_test
    features = np.empty((spec.n_classes * per_class, spec.dim))
    labels = np.empty(spec.n_classes * per_class, dtype=np.int64)
    is_train = np.zeros(spec.n_classes * per_class, dtype=bool)
    for c in range(spec.n_classes):
        block = slice(c * per_class, (c + 1) * per_class)
        features[block] = means[c] + noise_scale * rng.standard_normal((per_class, spec.dim))
        labels[block] = c
        is_train[block.start : block.start + spec.n_train] = True

    ds = FeatureDataset(
        name=spec.name,
        features=features,
        labels=labels,
        is_train=is_train,
        meta={
            "strategy": spec.strategy_tag,
            "separation": spec.separation,
            "mean_placement": placement,
            "seed": spec.seed,
            "small": False,
            "width": 0.0,
        },
    )
    ds.validate()
    return ds


def save_features(ds: FeatureDataset, path: str | Path) -> None:
    """Write the canonical feature CSV (UTF-8, LF): label,split,f0..f{d-1}."""
    path = Path(path)
    header = "label,split," + ",".join(f"f{i}" for i in range(ds.dim))
    lines = [header]
    for i in range(ds.n_samples):
        split = "train" if ds.is_train[i] else "test"
        feats = ",".join(repr(float(v)) for v in ds.features[i])
        lines.append(f"{int(ds.labels[i])},{split},{feats}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_features(path: str | Path, name: str | None = None, meta: dict | None = None) -> FeatureDataset:
    """Parse a canonical feature CSV; errors carry the offending line number."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise DatasetError(f"{path}: empty file")
    header = lines[0].split(",")
    if header[:2] != ["label", "split"] or len(header) < 3:
        raise DatasetError(f"{path}:1: header must be 'label,split,f0,...'")
    for i, col in enumerate(header[2:]):
        if col != f"f{i}":
            raise DatasetError(f"{path}:1: feature column {i} is named {col!r}, expected 'f{i}'")
    dim = len(header) - 2

    labels: list[int] = []
    splits: list[bool] = []
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != dim + 2:
            raise DatasetError(f"{path}:{lineno}: expected {dim + 2} fields, got {len(parts)}")
        try:
            label = int(parts[0])
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: label {parts[0]!r} is not an integer") from None
        if label < 0:
            raise DatasetError(f"{path}:{lineno}: label must be nonnegative, got {label}")
        if parts[1] not in CSV_SPLITS:
            raise DatasetError(f"{path}:{lineno}: split {parts[1]!r} is not one of {CSV_SPLITS}")
        try:
            values = [float(v) for v in parts[2:]]
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: non-numeric feature value") from None
        if not all(math.isfinite(v) for v in values):
            raise DatasetError(f"{path}:{lineno}: non-finite feature value")
        labels.append(label)
        splits.append(parts[1] == "train")
        rows.append(values)

    if not rows:
        raise DatasetError(f"{path}: no data rows")
    ds = FeatureDataset(
        name=name if name is not None else path.stem,
        features=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        is_train=np.array(splits, dtype=bool),
        meta=dict(meta) if meta else {},
    )
    try:
        ds.validate()
    except DatasetError as exc:
        raise DatasetError(f"{path}: {exc}") from None
    return ds


def dataset_stats(ds: FeatureDataset) -> DatasetStats:
    """Mean and population std of per-class train/test sample counts."""
    if ds.n_samples == 0:
        raise DatasetError("dataset is empty")
    classes = ds.class_ids
    train_counts = np.array([np.sum((ds.labels == c) & ds.is_train) for c in classes], dtype=float)
    test_counts = np.array([np.sum((ds.labels == c) & ~ds.is_train) for c in classes], dtype=float)
    return DatasetStats(
        n_classes=len(classes),
        n_mean=float(train_counts.mean()),
        sigma_train=float(train_counts.std()),
        mu_test=float(test_counts.mean()),
        sigma_test=float(test_counts.std()),
        small=bool(ds.meta.get("small", False)),
        width=float(ds.meta.get("width", 0.0)),
    )
