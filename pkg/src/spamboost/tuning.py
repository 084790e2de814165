"""Exhaustive hyperparameter grid search with validation during training.

Combinations are enumerated in lexicographic order of the grid's value
lists (first listed field varies slowest). Each combination trains with
early stopping monitored on held-out validation rows and records its mean
validation error; the winner is the minimum-error combination, ties going
to the earliest one enumerated. Combinations are independent, so they may
be evaluated in parallel; the trace is always assembled in enumeration
order, which keeps results schedule-independent.

The test set is never passed in, so the search cannot leak it by
construction. After a search, refit the winning parameters on the full
training set before touching any test data.
"""

from __future__ import annotations

import csv
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import booster
from .dataset import Dataset, SplitSpec, kfold_indices, stratified_split

__all__ = [
    "ParamGrid",
    "ValidationConfig",
    "TrialRecord",
    "SearchTrace",
    "GridSearchError",
    "grid_search",
    "load_param_grid",
    "write_trace_csv",
]


class GridSearchError(ValueError):
    """Raised when a grid or validation configuration cannot be evaluated."""


@dataclass(frozen=True)
class ParamGrid:
    """Per-field candidate lists over ``booster.Hyperparams``.

    Field order is significant: it fixes the enumeration order of
    combinations. Every value is validated eagerly against the field's
    constraints.
    """

    values: dict[str, list]

    def __post_init__(self) -> None:
        if not self.values:
            raise GridSearchError("parameter grid is empty")
        known = set(booster.Hyperparams.field_names())
        defaults = booster.Hyperparams()
        for name, candidates in self.values.items():
            if name not in known:
                raise GridSearchError(f"unknown hyperparameter name {name!r}")
            if not isinstance(candidates, list) or not candidates:
                raise GridSearchError(f"grid for {name!r} must be a nonempty list")
            for value in candidates:
                try:
                    replace(defaults, **{name: value})
                except (TypeError, ValueError) as exc:
                    raise GridSearchError(
                        f"invalid value {value!r} for {name!r}: {exc}"
                    ) from None

    def __len__(self) -> int:
        count = 1
        for candidates in self.values.values():
            count *= len(candidates)
        return count

    def combinations(
        self, base: Optional[booster.Hyperparams] = None
    ) -> list[booster.Hyperparams]:
        """All combinations, last listed field varying fastest."""
        base = base or booster.Hyperparams()
        names = list(self.values)
        combos = []
        for choice in itertools.product(*(self.values[n] for n in names)):
            combos.append(replace(base, **dict(zip(names, choice))))
        return combos


@dataclass(frozen=True)
class ValidationConfig:
    """How each combination is scored: stratified holdout or k-fold.

    Scoring is always the classification error on the validation rows.
    """

    strategy: str = "holdout"
    fraction: float = 0.2
    k: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in ("holdout", "kfold"):
            raise GridSearchError(
                f"strategy must be 'holdout' or 'kfold', got {self.strategy!r}"
            )
        if self.strategy == "holdout" and not 0.0 < self.fraction < 1.0:
            raise GridSearchError(
                f"holdout fraction must be in (0, 1), got {self.fraction}"
            )
        if self.strategy == "kfold" and self.k < 2:
            raise GridSearchError(f"k must be >= 2, got {self.k}")
        if self.seed < 0:
            raise GridSearchError("seed must be a non-negative integer")


@dataclass(frozen=True)
class TrialRecord:
    params: booster.Hyperparams
    validation_error: float
    training_rounds_used: int
    wall_time: float


SearchTrace = list[TrialRecord]


def _validation_pairs(
    train: Dataset, val: ValidationConfig
) -> list[tuple[Dataset, Dataset]]:
    if val.strategy == "holdout":
        fit, hold = stratified_split(train, SplitSpec(val.fraction, val.seed))
        return [(fit, hold)]
    pairs = []
    for train_ids, valid_ids in kfold_indices(train, val.k, val.seed):
        pairs.append((train.take_row_ids(train_ids), train.take_row_ids(valid_ids)))
    return pairs


def _check_classes(pairs: Iterable[tuple[Dataset, Dataset]], combo_desc: str) -> None:
    for i, (fit, hold) in enumerate(pairs):
        for side, ds in (("training", fit), ("validation", hold)):
            counts = ds.class_counts()
            if counts[0] == 0 or counts[1] == 0:
                raise GridSearchError(
                    f"combination {combo_desc}: class absent from the {side} "
                    f"side of fold {i}"
                )


def _evaluate_combo(
    args: tuple[Dataset, booster.Hyperparams, ValidationConfig, int]
) -> TrialRecord:
    train_ds, params, val, seed = args
    start = time.perf_counter()
    pairs = _validation_pairs(train_ds, val)
    _check_classes(pairs, repr(params))
    errors = []
    rounds = []
    for fit, hold in pairs:
        model = booster.train(fit, params, seed, valid_ds=hold)
        predicted = booster.predict_label(model, hold.features)
        errors.append(float((predicted != hold.labels).mean()))
        rounds.append(len(model.trees))
    return TrialRecord(
        params=params,
        validation_error=float(np.mean(errors)),
        training_rounds_used=int(round(float(np.mean(rounds)))),
        wall_time=time.perf_counter() - start,
    )


def grid_search(
    train: Dataset,
    grid: ParamGrid,
    val: ValidationConfig,
    seed: int,
    base: Optional[booster.Hyperparams] = None,
    n_jobs: int = 1,
) -> tuple[booster.Hyperparams, SearchTrace]:
    """Evaluate every combination and return (best params, full trace)."""
    combos = grid.combinations(base)
    tasks = [(train, params, val, seed) for params in combos]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            trace = list(pool.map(_evaluate_combo, tasks))
    else:
        trace = [_evaluate_combo(task) for task in tasks]

    best = min(range(len(trace)), key=lambda i: (trace[i].validation_error, i))
    return trace[best].params, trace


def load_param_grid(path: str | Path) -> ParamGrid:
    """Read a grid config: a JSON object mapping field names to value lists."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise GridSearchError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise GridSearchError(f"{path}: invalid grid config ({exc})") from None
    if not isinstance(doc, dict):
        raise GridSearchError(f"{path}: grid config must be a JSON object")
    return ParamGrid(values=doc)


def write_trace_csv(trace: SearchTrace, path: str | Path) -> None:
    """One row per combination, in enumeration order."""
    field_names = booster.Hyperparams.field_names()
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["combination", *field_names, "validation_error", "training_rounds_used", "wall_time_s"]
        )
        for i, record in enumerate(trace):
            writer.writerow(
                [
                    i,
                    *(getattr(record.params, name) for name in field_names),
                    repr(record.validation_error),
                    record.training_rounds_used,
                    f"{record.wall_time:.3f}",
                ]
            )
