"""Binary-classification dataset handling: CSV ingestion, train/valid/
heldout splitting, and seeded subsampling for the subset stage.

CSV contract: UTF-8, comma-separated, one header row, decimal-point
numerals, final column named ``label`` with values 0/1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "DatasetError",
    "load_csv_dataset",
    "split_dataset",
    "subsample",
    "generate_classification_dataset",
    "bundled_dataset_path",
]


class DatasetError(ValueError):
    """Schema, parse, or split failure with a human-readable location."""


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        if not np.isfinite(self.features).all():
            raise DatasetError("features contain non-finite values")
        if not np.isin(self.labels, (0, 1)).all():
            raise DatasetError("labels must be 0 or 1")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def F(self) -> int:
        return self.features.shape[1]

    def take(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.feature_names)


def load_csv_dataset(path: str | Path) -> Dataset:
    """Parse a CSV file into a Dataset; the last column is the label."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such dataset file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if len(header) < 2:
            raise DatasetError(f"{path}: need at least one feature column and a label")
        if header[-1] != "label":
            raise DatasetError(f"{path}: last column must be named 'label', got {header[-1]!r}")
        rows = []
        labels = []
        for r, row in enumerate(reader, start=2):
            vals = []
            for c, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(f"{path}: non-numeric cell at row {r}, column {c + 1}: {cell!r}") from None
                if not np.isfinite(v):
                    raise DatasetError(f"{path}: non-finite cell at row {r}, column {c + 1}: {cell!r}")
                vals.append(v)
            label = vals.pop()
            if label not in (0.0, 1.0):
                raise DatasetError(f"{path}: non-binary label {label!r} at row {r}")
            rows.append(vals)
            labels.append(int(label))
    X = np.array(rows, dtype=float)
    y = np.array(labels, dtype=int)
    # size floor applies to source datasets only; splits and subsamples
    # may legitimately be smaller
    if len(y) < 10:
        raise DatasetError(f"{path}: dataset too small: n={len(y)} < 10")
    return Dataset(X, y, tuple(header[:-1]))


def _check_part(name: str, ds_idx: np.ndarray, labels: np.ndarray):
    if len(ds_idx) < 2:
        raise DatasetError(
            f"{name} split has fewer than 2 rows; use different fractions"
        )
    if len(np.unique(labels[ds_idx])) < 2:
        raise DatasetError(
            f"{name} split contains a single class; try another seed or fractions"
        )


def split_dataset(
    ds: Dataset, train_frac: float = 0.6, valid_frac: float = 0.2, seed: int = 0
) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded shuffle then contiguous train/valid/heldout partition."""
    if train_frac <= 0 or valid_frac <= 0 or train_frac + valid_frac >= 1:
        raise ValueError("fractions must be positive with train + valid < 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.n)
    n_train = int(round(train_frac * ds.n))
    n_valid = int(round(valid_frac * ds.n))
    parts = {
        "train": perm[:n_train],
        "valid": perm[n_train : n_train + n_valid],
        "heldout": perm[n_train + n_valid :],
    }
    for name, idx in parts.items():
        _check_part(name, idx, ds.labels)
    return ds.take(parts["train"]), ds.take(parts["valid"]), ds.take(parts["heldout"])


def subsample(ds: Dataset, fraction: float, seed: int) -> Dataset:
    """Seeded draw of ceil(fraction * n) rows without replacement. Retries
    with a derived seed (up to 10 times) if the draw is single-class."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    k = int(np.ceil(fraction * ds.n))
    for attempt in range(10):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(attempt,)))
        idx = rng.choice(ds.n, size=k, replace=False)
        if len(np.unique(ds.labels[idx])) == 2:
            return ds.take(idx)
    raise DatasetError("could not draw a two-class subsample in 10 attempts")


def generate_classification_dataset(
    n: int = 2000,
    F: int = 20,
    informative: int = 5,
    seed: int = 7,
    coef_scale: float = 2.0,
    label_noise: float = 0.5,
) -> Dataset:
    """Two-class dataset from a sparse logistic ground truth; only the
    first ``informative`` features carry signal, the rest are noise.

    The defaults produce a landscape where the full training split is
    well fit without penalty while small subsamples overfit, so subset
    runs prefer an equal-or-stronger penalty.
    """
    if not 1 <= informative <= F:
        raise ValueError("informative must lie in [1, F]")
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, F))
    w = np.zeros(F)
    w[:informative] = rng.normal(scale=coef_scale, size=informative)
    logits = X[:, :informative] @ w[:informative] + rng.normal(scale=label_noise, size=n)
    y = (logits > 0).astype(int)
    names = tuple(f"f{i}" for i in range(F))
    return Dataset(X, y, names)


def bundled_dataset_path() -> Path:
    """Path of the CSV dataset shipped with the package."""
    return Path(__file__).parent / "data" / "classification_2000x20.csv"


def save_csv_dataset(ds: Dataset, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + ["label"])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
