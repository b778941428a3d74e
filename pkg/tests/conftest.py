from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from aggregate_engine.dataset import Dataset, RockSample
from aggregate_engine.synthetic import linear_dataset, write_csv

REPO_ROOT = Path(__file__).resolve().parents[1]


def make_dataset(features, la=None, mde=None) -> Dataset:
    """Dataset from a (N, 3) feature array and optional target sequences."""
    features = np.asarray(features, dtype=np.float64).reshape(-1, 3)
    n = len(features)
    la = [None] * n if la is None else [None if v is None else float(v) for v in la]
    mde = [None] * n if mde is None else [None if v is None else float(v) for v in mde]
    return Dataset(tuple(
        RockSample(f"X{i + 1}", float(v), float(d), float(p), la[i], mde[i])
        for i, (v, d, p) in enumerate(features)
    ))


def random_features(rng: np.random.Generator, n: int) -> np.ndarray:
    lo = np.array([3500.0, 2.3, 0.5])
    hi = np.array([6500.0, 2.8, 12.0])
    return lo + rng.random((n, 3)) * (hi - lo)


@pytest.fixture
def bundled_csv() -> Path:
    return REPO_ROOT / "data" / "carbonate_7.csv"


@pytest.fixture
def linear_csv(tmp_path) -> Path:
    path = tmp_path / "linear.csv"
    write_csv(linear_dataset(10), path)
    return path
