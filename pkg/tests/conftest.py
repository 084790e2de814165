from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from spamboost.dataset import Dataset

REPO_ROOT = Path(__file__).resolve().parent.parent

SPAMBASE_HELP = (
    "Spambase benchmark file not found. Place the UCI Spambase CSV "
    "(4601 rows, 57 features + label) at data/spambase.data or point "
    "the SPAMBASE_DATA environment variable at it."
)


def spambase_path() -> Path | None:
    env = os.environ.get("SPAMBASE_DATA")
    candidates = [Path(env)] if env else []
    candidates.append(REPO_ROOT / "data" / "spambase.data")
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    return None


@pytest.fixture(scope="session")
def spambase_file() -> Path:
    path = spambase_path()
    if path is None:
        pytest.skip(SPAMBASE_HELP)
    return path


def make_binary_dataset(
    n: int = 120, p: int = 4, seed: int = 0, separation: float = 1.2, noise: float = 0.6
) -> Dataset:
    """Two overlapping Gaussian clouds; ``separation`` controls difficulty."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    score = X[:, 0] + 0.5 * X[:, min(1, p - 1)] + noise * rng.normal(size=n)
    y = (score > np.median(score) - separation * 0.1).astype(int)
    # Guarantee both classes.
    y[0] = 0
    y[1] = 1
    return Dataset(features=X, labels=y)


def write_csv(path: Path, ds: Dataset) -> Path:
    lines = []
    for i in range(ds.n_rows):
        fields = [repr(float(v)) for v in ds.features[i]]
        fields.append(str(int(ds.labels[i])))
        lines.append(",".join(fields))
    path.write_text("\n".join(lines) + "\n")
    return path
