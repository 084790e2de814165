"""Spambase-format ingestion and seeded stratified splitting.

The on-disk format is the one the Spambase benchmark ships with: headerless
CSV, one row per email, 57 real-valued features followed by an integer 0/1
label (1 = spam). Everything here is a pure function over immutable arrays,
so splits are reproducible and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "SplitSpec",
    "DataFormatError",
    "load_dataset",
    "stratified_split",
    "kfold_indices",
]


class DataFormatError(ValueError):
    """Raised when an input file violates the expected CSV layout."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense feature matrix with binary labels and stable row identifiers.

    ``row_ids`` are assigned positionally (0..n-1) at load time and survive
    splitting, so any derived subset can be traced back to file lines.
    Resampling operations assign fresh ids because synthetic rows have no
    original identity.
    """

    features: np.ndarray
    labels: np.ndarray
    row_ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {features.shape}")
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be 1-D")
        if features.shape[0] != labels.shape[0]:
            raise ValueError(
                f"row count mismatch: {features.shape[0]} feature rows vs "
                f"{labels.shape[0]} labels"
            )
        if labels.size and not np.isin(labels, (0, 1)).all():
            bad = labels[~np.isin(labels, (0, 1))][0]
            raise ValueError(f"labels must be 0 or 1, found {bad}")
        if not np.isfinite(features).all():
            raise ValueError("features contain NaN or infinite values")
        row_ids = self.row_ids
        if row_ids is None:
            row_ids = np.arange(labels.shape[0], dtype=np.int64)
        else:
            row_ids = np.asarray(row_ids, dtype=np.int64)
            if row_ids.shape != labels.shape:
                raise ValueError("row_ids length must match row count")
            if row_ids.size and (len(np.unique(row_ids)) != row_ids.size or row_ids.min() < 0):
                raise ValueError("row_ids must be unique non-negative integers")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "row_ids", _frozen(row_ids))

    @property
    def n_rows(self) -> int:
        return self.labels.shape[0]

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> dict[int, int]:
        """Row count per label value, always reporting both classes."""
        return {c: int((self.labels == c).sum()) for c in (0, 1)}

    def take(self, positions: np.ndarray) -> "Dataset":
        """Positional subset preserving row identifiers."""
        positions = np.asarray(positions, dtype=np.int64)
        return Dataset(
            features=self.features[positions],
            labels=self.labels[positions],
            row_ids=self.row_ids[positions],
        )

    def take_row_ids(self, ids: np.ndarray) -> "Dataset":
        """Subset by row identifier, keeping this dataset's row order."""
        mask = np.isin(self.row_ids, np.asarray(ids, dtype=np.int64))
        return self.take(np.flatnonzero(mask))


@dataclass(frozen=True)
class SplitSpec:
    """Test fraction plus the seed that fixes the shuffle."""

    test_fraction: float
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(
                f"test_fraction must be strictly between 0 and 1, got {self.test_fraction}"
            )
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


def load_dataset(path: str | Path, expected_features: int | None = None) -> Dataset:
    """Read a headerless CSV whose last field is the 0/1 label.

    Every field must parse as a finite real number; any NaN/inf or a row with
    the wrong field count is a hard error naming the 1-based line number.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc

    lines = text.splitlines()
    if not lines:
        raise DataFormatError(f"{path}: file contains no data rows")

    n_fields: int | None = None if expected_features is None else expected_features + 1
    rows: list[list[float]] = []
    labels: list[int] = []
    for lineno, line in enumerate(lines, start=1):
        fields = line.split(",")
        if n_fields is None:
            n_fields = len(fields)
            if n_fields < 2:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected at least one feature and a label"
                )
        if len(fields) != n_fields:
            raise DataFormatError(
                f"{path}: line {lineno}: expected {n_fields} fields, got {len(fields)}"
            )
        values = []
        for raw in fields:
            try:
                value = float(raw)
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: non-numeric field {raw!r}"
                ) from None
            if not math.isfinite(value):
                raise DataFormatError(
                    f"{path}: line {lineno}: non-finite field {raw!r}"
                )
            values.append(value)
        label = values[-1]
        if label not in (0.0, 1.0):
            raise DataFormatError(
                f"{path}: line {lineno}: label must be 0 or 1, got {fields[-1]!r}"
            )
        rows.append(values[:-1])
        labels.append(int(label))

    ds = Dataset(
        features=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
    )
    if expected_features is not None and ds.feature_count != expected_features:
        raise DataFormatError(
            f"{path}: expected {expected_features} features, found {ds.feature_count}"
        )
    return ds


def _class_positions(ds: Dataset) -> dict[int, np.ndarray]:
    return {c: np.flatnonzero(ds.labels == c) for c in (0, 1)}


def stratified_split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded stratified partition into (train, test).

    Per class the test quota is round-half-to-even(test_fraction * count);
    quota rows are drawn by a seeded shuffle of that class, the rest go to
    train. Both outputs keep the original row order, so repeated calls with
    the same spec are byte-for-byte identical.
    """
    by_class = _class_positions(ds)
    for c, positions in by_class.items():
        if len(positions) < 2:
            raise ValueError(f"class {c} has {len(positions)} rows; need at least 2")

    rng = np.random.default_rng(spec.seed)
    test_pos: list[np.ndarray] = []
    train_pos: list[np.ndarray] = []
    for c in (0, 1):
        positions = by_class[c]
        quota = round(spec.test_fraction * len(positions))
        if quota > len(positions):
            raise ValueError(
                f"class {c} has {len(positions)} rows but the test quota is {quota}"
            )
        perm = rng.permutation(positions)
        test_pos.append(perm[:quota])
        train_pos.append(perm[quota:])

    train_idx = np.sort(np.concatenate(train_pos))
    test_idx = np.sort(np.concatenate(test_pos))
    return ds.take(train_idx), ds.take(test_idx)


def kfold_indices(
    ds: Dataset, k: int, seed: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Stratified k-fold partition, returned as (train_ids, valid_ids) pairs.

    Ids are the dataset's row identifiers. Rows of each class are shuffled
    with the seed and dealt round-robin, the deal position carrying over
    from one class to the next so fold sizes stay balanced even at k == n.
    """
    n = ds.n_rows
    if not 2 <= k <= n:
        raise ValueError(f"k must satisfy 2 <= k <= {n}, got {k}")

    rng = np.random.default_rng(seed)
    fold_members: list[list[int]] = [[] for _ in range(k)]
    cursor = 0
    for c in (0, 1):
        positions = np.flatnonzero(ds.labels == c)
        for pos in rng.permutation(positions):
            fold_members[cursor % k].append(int(pos))
            cursor += 1

    folds: list[tuple[np.ndarray, np.ndarray]] = []
    all_pos = np.arange(n)
    for members in fold_members:
        valid_pos = np.sort(np.array(members, dtype=np.int64))
        train_pos = np.setdiff1d(all_pos, valid_pos)
        folds.append(
            (
                np.sort(ds.row_ids[train_pos]),
                np.sort(ds.row_ids[valid_pos]),
            )
        )
    return folds
