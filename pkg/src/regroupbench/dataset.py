"""Labeled feature-vector datasets: construction, CSV I/O, synthesis, splitting.

Binary label convention used throughout the package: class 0 is the
positive/minority class, class 1 the majority class.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """Raised when a dataset violates its invariants or cannot be parsed."""


@dataclass(frozen=True)
class Dataset:
    """An (n, D) float64 feature matrix plus length-n integer labels.

    Invariants (checked at construction): n >= 1, D >= 1, all features
    finite, labels in 0..C-1 with every class present at least once.
    Arrays are frozen after construction and safe to share.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DatasetError(f"feature matrix must be 2-D and nonempty, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            bad = np.argwhere(~np.isfinite(X))[0]
            raise DatasetError(f"non-finite feature value at row {bad[0]}, column {bad[1]}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DatasetError(f"labels length {y.shape} does not match {X.shape[0]} rows")
        if y.min() < 0:
            raise DatasetError("negative class id")
        counts = np.bincount(y)
        if np.any(counts == 0):
            missing = int(np.argmin(counts))
            raise DatasetError(f"class {missing} has no samples")
        if self.class_names is not None and len(self.class_names) != len(counts):
            raise DatasetError("class_names length does not match number of classes")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "_class_counts", tuple(int(c) for c in counts))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self._class_counts)

    @property
    def class_counts(self) -> tuple[int, ...]:
        return self._class_counts

    def subset(self, idx: np.ndarray) -> "Dataset":
        """Row subset keeping the given order (all classes must survive)."""
        return Dataset(self.features[idx], self.labels[idx], self.class_names)

    def with_labels(self, labels: np.ndarray, class_names=None) -> "Dataset":
        return Dataset(self.features, labels, class_names)


@dataclass(frozen=True)
class GaussianComponent:
    """Isotropic Gaussian: mean vector, scalar stddev, sample count."""

    mean: tuple[float, ...]
    stddev: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise DatasetError("component count must be >= 1")
        if not self.stddev > 0:
            raise DatasetError("component stddev must be > 0")
        object.__setattr__(self, "mean", tuple(float(v) for v in self.mean))


@dataclass(frozen=True)
class MixtureSpec:
    """Synthetic binary problem: one minority Gaussian vs a majority mixture."""

    minority: GaussianComponent
    majority_components: tuple[GaussianComponent, ...]
    seed: int = 0

    def __post_init__(self):
        comps = tuple(self.majority_components)
        if not comps:
            raise DatasetError("at least one majority component required")
        dim = len(self.minority.mean)
        for c in comps:
            if len(c.mean) != dim:
                raise DatasetError(
                    f"component dimension {len(c.mean)} != minority dimension {dim}"
                )
        object.__setattr__(self, "majority_components", comps)


def generate_imbalanced_mixture(spec: MixtureSpec) -> Dataset:
    """Sample the mixture. Minority rows come first with label 0, then the
    majority components in order with label 1. PCG64-seeded, so identical
    spec+seed gives bit-identical output across platforms."""
    rng = np.random.default_rng(spec.seed)
    dim = len(spec.minority.mean)
    blocks, labels = [], []
    for label, comp in [(0, spec.minority)] + [(1, c) for c in spec.majority_components]:
        pts = np.asarray(comp.mean) + comp.stddev * rng.standard_normal((comp.count, dim))
        blocks.append(pts)
        labels.append(np.full(comp.count, label, dtype=np.int64))
    return Dataset(np.vstack(blocks), np.concatenate(labels))


def stratified_split(ds: Dataset, test_fraction: float, seed: int):
    """Split into (train, test) with per-class test counts
    round-half-to-even(fraction * count), clamped to [1, count - 1].

    Deterministic given the seed; train and test partition the rows.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DatasetError(f"test_fraction must be in (0, 1), got {test_fraction}")
    for c, count in enumerate(ds.class_counts):
        if count < 2:
            raise DatasetError(f"class {c} has {count} sample(s); need >= 2 to split")
    rng = np.random.default_rng(seed)
    test_mask = np.zeros(ds.n, dtype=bool)
    for c, count in enumerate(ds.class_counts):
        n_test = min(max(1, round(test_fraction * count)), count - 1)
        idx = np.flatnonzero(ds.labels == c)
        chosen = rng.permutation(idx)[:n_test]
        test_mask[chosen] = True
    train = ds.subset(np.flatnonzero(~test_mask))
    test = ds.subset(np.flatnonzero(test_mask))
    return train, test


def standardize(train: Dataset, others: list[Dataset] = ()):
    """Center/scale every dataset with the train columns' mean and
    population (1/n) stddev. Constant train columns are only centered.

    Returns (standardized train, list of standardized others, mean, stddev).
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)  # ddof=0, population convention
    scale = np.where(std > 0, std, 1.0)

    def apply(ds: Dataset) -> Dataset:
        return Dataset((ds.features - mean) / scale, ds.labels, ds.class_names)

    return apply(train), [apply(ds) for ds in others], mean, std


def save_csv_dataset(ds: Dataset, path):
    """Write the dataset as UTF-8 CSV: header f0..f{D-1},label; features with
    17 significant digits (exact float64 round-trip)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join([f"f{j}" for j in range(ds.dim)] + ["label"]) + "\n")
        for row, y in zip(ds.features, ds.labels):
            name = ds.class_names[y] if ds.class_names is not None else str(int(y))
            fh.write(",".join(np.format_float_scientific(v, precision=16) for v in row))
            fh.write(f",{name}\n")


def load_csv_dataset(path, label_column: str | int = "label") -> Dataset:
    """Load a headered CSV into a Dataset.

    The label column may be named or given by index. Integer label values
    forming a contiguous 0-based range are kept verbatim (so integer-labeled
    datasets round-trip exactly); any other labels get class ids by first
    appearance, recorded in class_names.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such file: {path}")
    with path.open("r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n").rstrip("\r") for ln in fh if ln.strip()]
    if len(lines) < 2:
        raise DatasetError(f"{path}: empty dataset (need header plus >= 1 row)")
    header = lines[0].split(",")
    if isinstance(label_column, int):
        label_idx = label_column
        if not 0 <= label_idx < len(header):
            raise DatasetError(f"label column index {label_idx} out of range")
    else:
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise DatasetError(f"label column {label_column!r} not in header {header}") from None
    feat_idx = [j for j in range(len(header)) if j != label_idx]

    rows, raw_labels = [], []
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise DatasetError(f"{path}: row {i} has {len(cells)} cells, expected {len(header)}")
        vals = []
        for j in feat_idx:
            try:
                vals.append(float(cells[j]))
            except ValueError:
                raise DatasetError(
                    f"{path}: row {i}, column {header[j]!r}: non-numeric value {cells[j]!r}"
                ) from None
        rows.append(vals)
        raw_labels.append(cells[label_idx])

    distinct = list(dict.fromkeys(raw_labels))
    try:
        as_int = [int(s) for s in distinct]
        contiguous = sorted(as_int) == list(range(len(as_int)))
    except ValueError:
        contiguous = False
    if contiguous:
        labels = np.array([int(s) for s in raw_labels], dtype=np.int64)
        names = tuple(str(c) for c in range(len(distinct)))
    else:
        mapping = {s: c for c, s in enumerate(distinct)}
        labels = np.array([mapping[s] for s in raw_labels], dtype=np.int64)
        names = tuple(distinct)
    return Dataset(np.array(rows, dtype=np.float64), labels, class_names=names)
