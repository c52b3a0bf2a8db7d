"""Dataset loading, normalization, splitting, and synthetic generation."""

import csv
import json
from dataclasses import dataclass, field

import numpy as np


class ParseError(ValueError):
    pass


@dataclass
class Dataset:
    features: np.ndarray        # (n_samples, n_features), float64
    labels: np.ndarray          # (n_samples,), int64 class indices
    n_classes: int
    feature_names: list = None
    feature_roles: list = None  # "informative" | "redundant" | "noise", synthetic only

    def __post_init__(self):
        if self.feature_names is None:
            self.feature_names = [f"f{i}" for i in range(self.features.shape[1])]

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def subset(self, indices):
        return Dataset(self.features[indices], self.labels[indices],
                       self.n_classes, list(self.feature_names),
                       list(self.feature_roles) if self.feature_roles else None)


def normalize_features(features, scheme):
    """zscore (constant columns map to 0), minmax, or none."""
    if scheme == "none":
        return features
    if scheme == "zscore":
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return (features - mean) / std
    if scheme == "minmax":
        lo = features.min(axis=0)
        hi = features.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        return (features - lo) / span
    raise ValueError(f"unknown normalization scheme {scheme!r}")


def load_csv(path, label_column="label", normalize="zscore") -> Dataset:
    """Load a numeric CSV with a header row and one integer label column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file")
        if label_column not in header:
            raise ParseError(f"{path}: missing label column {label_column!r}")
        label_idx = header.index(label_column)
        width = len(header)
        rows, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != width:
                raise ParseError(
                    f"{path}, row {line_no}: expected {width} cells, got {len(row)}")
            values = []
            for col_no, cell in enumerate(row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}, row {line_no}, column {col_no + 1} "
                        f"({header[col_no]}): non-numeric cell {cell!r}")
            labels.append(values.pop(label_idx))
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    features = np.asarray(rows, dtype=float)
    raw_labels = np.asarray(labels)
    int_labels = raw_labels.astype(np.int64)
    if not np.array_equal(raw_labels, int_labels) or int_labels.min() < 0:
        raise ParseError(f"{path}: labels must be nonnegative integers")
    feature_names = [h for i, h in enumerate(header) if i != label_idx]
    return Dataset(
        features=normalize_features(features, normalize),
        labels=int_labels,
        n_classes=int(int_labels.max()) + 1,
        feature_names=feature_names,
    )


def split(dataset: Dataset, test_fraction, seed):
    """Uniform random split without replacement, deterministic per seed."""
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = dataset.n_samples
    n_test = int(round(n * test_fraction))
    if n_test == 0 or n_test == n:
        raise ValueError(
            f"test_fraction {test_fraction} yields an empty split for {n} samples")
    perm = np.random.default_rng(seed).permutation(n)
    return dataset.subset(np.sort(perm[n_test:])), dataset.subset(np.sort(perm[:n_test]))


N_INFORMATIVE = 5
N_REDUNDANT = 15
N_NOISE = 480
_N_CLUSTERS_PER_CLASS = 8
_CENTER_SCALE = 1.5
_CLUSTER_STD = 1.0


def gen_madelon_like(n_samples, seed) -> Dataset:
    """Two-class, 500-feature dataset with 5 informative features, 15 noisy
    linear combinations of them, and 480 pure-noise features.

    Informative features come from class-conditional Gaussian clusters
    centered on hypercube vertices. Columns are shuffled; feature_roles
    records the role of every column.
    """
    if n_samples < 100:
        raise ValueError(f"n_samples must be >= 100, got {n_samples}")
    rng = np.random.default_rng(seed)

    # 16 distinct vertices of the {-1, 1}^5 hypercube, half per class
    vertex_ids = rng.choice(2 ** N_INFORMATIVE, size=2 * _N_CLUSTERS_PER_CLASS,
                            replace=False)
    vertices = (((vertex_ids[:, None] >> np.arange(N_INFORMATIVE)) & 1) * 2 - 1)
    centers = vertices.astype(float) * _CENTER_SCALE

    labels = rng.permutation(np.arange(n_samples) % 2).astype(np.int64)
    cluster = labels * _N_CLUSTERS_PER_CLASS + rng.integers(
        0, _N_CLUSTERS_PER_CLASS, size=n_samples)
    informative = centers[cluster] + rng.normal(0.0, _CLUSTER_STD,
                                                (n_samples, N_INFORMATIVE))

    coeffs = rng.uniform(-1.0, 1.0, (N_INFORMATIVE, N_REDUNDANT))
    redundant = informative @ coeffs
    redundant += rng.normal(0.0, 1.0, redundant.shape) * (
        0.01 * redundant.std(axis=0))

    noise = rng.standard_normal((n_samples, N_NOISE))

    features = np.concatenate([informative, redundant, noise], axis=1)
    roles = (["informative"] * N_INFORMATIVE + ["redundant"] * N_REDUNDANT
             + ["noise"] * N_NOISE)
    perm = rng.permutation(features.shape[1])
    return Dataset(
        features=features[:, perm],
        labels=labels,
        n_classes=2,
        feature_roles=[roles[i] for i in perm],
    )


def save_csv(dataset: Dataset, path, label_column="label"):
    """Write the dataset back to the CSV schema, with a sidecar role file
    when roles are known."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + [label_column])
        for x, y in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])
    if dataset.feature_roles is not None:
        meta = {
            "n_classes": dataset.n_classes,
            "feature_roles": {name: role for name, role in
                              zip(dataset.feature_names, dataset.feature_roles)},
        }
        with open(str(path) + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2)
