"""Data-level class-imbalance treatments.

Five methods: random over-sampling, random under-sampling, SMOTE, Tomek-link
removal, and the SMOTE-then-Tomek composition. All balance targets are exact
class-count equality. Distances are Euclidean on raw feature values; the
pipeline applies no scaling anywhere, so heterogeneous feature ranges weigh
into the neighbour structure (a known caveat of this setup). Nearest
neighbour ties break toward the earlier row, which for every dataset this
package produces is the lower row id.

Outputs are fresh datasets with reindexed row ids, since synthetic or
duplicated rows have no original identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

__all__ = [
    "ResampleSpec",
    "METHODS",
    "random_oversample",
    "random_undersample",
    "smote",
    "tomek_links",
    "smote_tomek",
    "apply_resample",
]

METHODS = ("random_over", "random_under", "smote", "tomek", "smote_tomek")


@dataclass(frozen=True)
class ResampleSpec:
    method: str
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(
                f"unknown resampling method {self.method!r}; expected one of {METHODS}"
            )
        if self.k_neighbors < 1:
            raise ValueError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


def _fresh(features: np.ndarray, labels: np.ndarray) -> Dataset:
    return Dataset(features=features, labels=labels)


def _split_classes(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """(minority positions, majority positions); ties treat 1 as minority."""
    pos0 = np.flatnonzero(ds.labels == 0)
    pos1 = np.flatnonzero(ds.labels == 1)
    if len(pos0) == 0 or len(pos1) == 0:
        raise ValueError("resampling requires both classes to be present")
    if len(pos1) <= len(pos0):
        return pos1, pos0
    return pos0, pos1


def random_oversample(ds: Dataset, seed: int) -> Dataset:
    """Duplicate seeded draws of minority rows until class counts are equal."""
    minority, majority = _split_classes(ds)
    need = len(majority) - len(minority)
    if need == 0:
        return ds
    rng = np.random.default_rng(seed)
    picks = rng.choice(minority, size=need, replace=True)
    features = np.vstack([ds.features, ds.features[picks]])
    labels = np.concatenate([ds.labels, ds.labels[picks]])
    return _fresh(features, labels)


def random_undersample(ds: Dataset, seed: int) -> Dataset:
    """Drop a seeded sample of majority rows down to the minority count."""
    minority, majority = _split_classes(ds)
    if len(majority) == len(minority):
        return ds
    rng = np.random.default_rng(seed)
    kept_majority = rng.choice(majority, size=len(minority), replace=False)
    keep = np.sort(np.concatenate([minority, kept_majority]))
    return _fresh(ds.features[keep], ds.labels[keep])


def _pairwise_sq_dists(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    # Norm expansion keeps memory at O(len(queries) * len(points)).
    q2 = np.einsum("ij,ij->i", queries, queries)
    p2 = np.einsum("ij,ij->i", points, points)
    sq = q2[:, None] + p2[None, :] - 2.0 * (queries @ points.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


def smote(ds: Dataset, k_neighbors: int, seed: int) -> Dataset:
    """Synthesize minority rows on segments toward minority nearest neighbours.

    Each synthetic row is x_i + u * (x_nn - x_i) with u uniform on [0, 1]
    and x_nn one of the k nearest minority neighbours of a seeded-random
    minority row x_i; generation stops when the classes balance.
    """
    if k_neighbors < 1:
        raise ValueError(f"k_neighbors must be >= 1, got {k_neighbors}")
    minority, majority = _split_classes(ds)
    m = len(minority)
    if k_neighbors >= m:
        raise ValueError(
            f"k_neighbors={k_neighbors} must be smaller than the minority class ({m} rows)"
        )
    need = len(majority) - m
    if need == 0:
        return ds

    X_min = ds.features[minority]
    sq = _pairwise_sq_dists(X_min, X_min)
    np.fill_diagonal(sq, np.inf)
    # Stable argsort keeps equal distances in row order.
    neighbours = np.argsort(sq, axis=1, kind="stable")[:, :k_neighbors]

    rng = np.random.default_rng(seed)
    base = rng.integers(0, m, size=need)
    picked = neighbours[base, rng.integers(0, k_neighbors, size=need)]
    u = rng.random(need)
    synthetic = X_min[base] + u[:, None] * (X_min[picked] - X_min[base])

    minority_label = int(ds.labels[minority[0]])
    features = np.vstack([ds.features, synthetic])
    labels = np.concatenate(
        [ds.labels, np.full(need, minority_label, dtype=np.int64)]
    )
    return _fresh(features, labels)


def _nearest_neighbour(X: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Index of each row's nearest other row (ties toward the earlier row)."""
    n = len(X)
    nn = np.empty(n, dtype=np.int64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        sq = _pairwise_sq_dists(X[start:stop], X)
        for i in range(start, stop):
            sq[i - start, i] = np.inf
        nn[start:stop] = np.argmin(sq, axis=1)
    return nn


def tomek_links(ds: Dataset) -> Dataset:
    """Drop the majority member of every cross-class mutual-NN pair.

    With equal class counts (e.g. right after SMOTE) label 0 is treated as
    the majority, so the composition still cleans the originally dominant
    class.
    """
    labels = ds.labels
    n0 = int((labels == 0).sum())
    n1 = int((labels == 1).sum())
    if n0 == 0 or n1 == 0 or ds.n_rows < 2:
        return ds
    majority_label = 0 if n0 >= n1 else 1

    nn = _nearest_neighbour(ds.features)
    idx = np.arange(ds.n_rows)
    mutual = nn[nn[idx]] == idx
    cross = labels != labels[nn[idx]]
    in_link = mutual & cross
    drop = in_link & (labels == majority_label)
    keep = np.flatnonzero(~drop)
    if len(keep) == ds.n_rows:
        return ds
    return _fresh(ds.features[keep], ds.labels[keep])


def smote_tomek(ds: Dataset, k_neighbors: int, seed: int) -> Dataset:
    """SMOTE to balance, then Tomek-link cleaning, in that order."""
    return tomek_links(smote(ds, k_neighbors, seed))


def apply_resample(ds: Dataset, spec: ResampleSpec) -> Dataset:
    if spec.method == "random_over":
        return random_oversample(ds, spec.seed)
    if spec.method == "random_under":
        return random_undersample(ds, spec.seed)
    if spec.method == "smote":
        return smote(ds, spec.k_neighbors, spec.seed)
    if spec.method == "tomek":
        return tomek_links(ds)
    return smote_tomek(ds, spec.k_neighbors, spec.seed)
