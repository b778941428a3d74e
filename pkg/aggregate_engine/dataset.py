"""
dataset.py — Sample data model, CSV ingestion, feature scaling and splits.

CSV contract (UTF-8, LF or CRLF, no quoting):
    id,velocity_mps,density_gcm3,porosity_pct,la_pct,mde_pct
la_pct / mde_pct may be empty (target absent).
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

CSV_HEADER = ("id", "velocity_mps", "density_gcm3", "porosity_pct", "la_pct", "mde_pct")
FEATURE_NAMES = ("velocity", "density", "porosity")

_DECIMAL = re.compile(r"^[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?$")


class Target(Enum):
    LA = "la"
    MDE = "mde"

    @property
    def label(self) -> str:
        return self.name


# ─────────────────────────────────────────────────────────────────────
# Samples
# ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class RockSample:
    id: str
    velocity: float            # m/s
    density: float             # g/cm³
    porosity: float            # percent
    la: float | None = None    # percent
    mde: float | None = None   # percent

    def __post_init__(self):
        problem = _sample_problem(self)
        if problem:
            raise DataError(problem)

    @property
    def features(self) -> tuple[float, float, float]:
        return (self.velocity, self.density, self.porosity)

    def target(self, target: Target) -> float | None:
        return self.la if target is Target.LA else self.mde


def _sample_problem(s: RockSample) -> str | None:
    if not s.id:
        return "empty id"
    for name, value in zip(FEATURE_NAMES, s.features):
        if not math.isfinite(value):
            return f"{name} is not finite"
    if s.velocity <= 0:
        return f"velocity out of range: {s.velocity} (must be > 0)"
    if s.density <= 0:
        return f"density out of range: {s.density} (must be > 0)"
    if not 0.0 <= s.porosity <= 100.0:
        return f"porosity out of range: {s.porosity} (must be in [0, 100])"
    for name, value in (("la", s.la), ("mde", s.mde)):
        if value is None:
            continue
        if not math.isfinite(value) or not 0.0 <= value <= 100.0:
            return f"{name} out of range: {value} (must be in [0, 100])"
    return None


@dataclass(frozen=True)
class Dataset:
    samples: tuple[RockSample, ...]
    grain_class: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        seen: set[str] = set()
        for s in self.samples:
            if s.id in seen:
                raise DataError(f"duplicate sample id '{s.id}'")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.samples]

    def features(self) -> np.ndarray:
        """(N, 3) array of raw features in CSV column order."""
        return np.array([s.features for s in self.samples], dtype=np.float64).reshape(-1, 3)

    def targets(self, target: Target) -> np.ndarray:
        """Target values, NaN where absent."""
        vals = [s.target(target) for s in self.samples]
        return np.array([np.nan if v is None else v for v in vals], dtype=np.float64)

    def subset(self, indices: Iterable[int]) -> Dataset:
        return Dataset(tuple(self.samples[i] for i in indices), self.grain_class)

    def with_target(self, target: Target) -> Dataset:
        return Dataset(
            tuple(s for s in self.samples if s.target(target) is not None),
            self.grain_class,
        )

    def to_csv_bytes(self) -> bytes:
        """Canonical CSV rendering (LF endings, shortest round-trip floats)."""
        lines = [",".join(CSV_HEADER)]
        for s in self.samples:
            cells = [s.id, repr(s.velocity), repr(s.density), repr(s.porosity),
                     "" if s.la is None else repr(s.la),
                     "" if s.mde is None else repr(s.mde)]
            lines.append(",".join(cells))
        return ("\n".join(lines) + "\n").encode("utf-8")

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_csv_bytes()).hexdigest()


# ─────────────────────────────────────────────────────────────────────
# CSV ingestion
# ─────────────────────────────────────────────────────────────────────

def load_csv(source: BinaryIO | bytes, grain_class: str | None = None) -> Dataset:
    """Parse the CSV contract into a Dataset. Errors name the 1-based row."""
    raw = source if isinstance(source, (bytes, bytearray)) else source.read()
    try:
        text = bytes(raw).decode("utf-8")
    except UnicodeDecodeError as e:
        raise DataError(f"input is not valid UTF-8 (byte {e.start})") from e
    if text.startswith("\ufeff"):
        text = text[1:]

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataError("empty input, expected header", row=1)

    samples: list[RockSample] = []
    seen: set[str] = set()
    for row_no, line in enumerate(lines, start=1):
        line = line.removesuffix("\r")
        if '"' in line or "\r" in line:
            raise DataError("quoting and bare carriage returns are not allowed", row=row_no)
        try:
            cells = next(csv.reader([line], quoting=csv.QUOTE_NONE)) if line else []
        except csv.Error as e:
            raise DataError(f"unreadable line: {e}", row=row_no) from None
        if row_no == 1:
            if tuple(cells) != CSV_HEADER:
                raise DataError(
                    f"malformed header {line!r}, expected {','.join(CSV_HEADER)!r}",
                    row=row_no,
                )
            continue
        if not line.strip():
            continue
        samples.append(_parse_row(cells, row_no, seen))

    logger.info(f"[DATA] Loaded {len(samples)} samples")
    return Dataset(tuple(samples), grain_class)


def _parse_row(cells: list[str], row_no: int, seen: set[str]) -> RockSample:
    if len(cells) != len(CSV_HEADER):
        raise DataError(f"expected {len(CSV_HEADER)} cells, got {len(cells)}", row=row_no)
    sid = cells[0]
    if not sid:
        raise DataError("empty id", row=row_no)
    if sid in seen:
        raise DataError(f"duplicate id '{sid}'", row=row_no)
    seen.add(sid)

    values: list[float | None] = []
    for name, cell in zip(CSV_HEADER[1:], cells[1:]):
        if cell == "" and name in ("la_pct", "mde_pct"):
            values.append(None)
            continue
        if not _DECIMAL.match(cell):
            raise DataError(f"non-numeric {name} cell {cell!r}", row=row_no)
        values.append(float(cell))

    try:
        return RockSample(sid, *values)  # type: ignore[arg-type]
    except DataError as e:
        raise DataError(str(e), row=row_no) from None


def load_csv_path(path, grain_class: str | None = None) -> Dataset:
    try:
        with open(path, "rb") as f:
            return load_csv(f, grain_class)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror or e}") from e


# ─────────────────────────────────────────────────────────────────────
# Feature scaling
# ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Prediction:
    value: float          # percent, never clamped
    extrapolated: bool    # features outside the fitted scaler range


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature min-max map of [min, max] onto [-1, +1]."""

    mins: tuple[float, float, float]
    maxs: tuple[float, float, float]

    def __post_init__(self):
        for name, lo, hi in zip(FEATURE_NAMES, self.mins, self.maxs):
            if not hi > lo:
                raise DataError(f"feature '{name}' is constant (min = max = {lo})")

    @property
    def _lo(self) -> np.ndarray:
        return np.asarray(self.mins, dtype=np.float64)

    @property
    def _span(self) -> np.ndarray:
        return np.asarray(self.maxs, dtype=np.float64) - self._lo

    def apply(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        return 2.0 * (x - self._lo) / self._span - 1.0

    def invert(self, normalized) -> np.ndarray:
        z = np.asarray(normalized, dtype=np.float64)
        return self._lo + (z + 1.0) * self._span / 2.0

    def is_extrapolated(self, features) -> np.ndarray | bool:
        x = np.asarray(features, dtype=np.float64)
        out = np.any((x < self._lo) | (x > np.asarray(self.maxs)), axis=-1)
        return bool(out) if out.ndim == 0 else out

    def as_dict(self) -> dict:
        return {"mins": list(self.mins), "maxs": list(self.maxs)}

    @classmethod
    def from_dict(cls, d: dict) -> FeatureScaler:
        return cls(tuple(float(v) for v in d["mins"]), tuple(float(v) for v in d["maxs"]))


def fit_scaler(data: Dataset | np.ndarray) -> FeatureScaler:
    x = data.features() if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if x.size == 0:
        raise DataError("cannot fit scaler on an empty dataset")
    x = x.reshape(-1, 3)
    mins = tuple(float(v) for v in x.min(axis=0))
    maxs = tuple(float(v) for v in x.max(axis=0))
    scaler = FeatureScaler(mins, maxs)
    logger.debug(f"[SCALER] mins={mins} maxs={maxs}")
    return scaler


def apply_scaler(scaler: FeatureScaler, features) -> np.ndarray:
    return scaler.apply(features)


def invert_scaler(scaler: FeatureScaler, normalized) -> np.ndarray:
    return scaler.invert(normalized)


@dataclass(frozen=True)
class TargetScale:
    """Affine map between percent and the normalized training space."""

    center: float
    half_range: float

    @classmethod
    def fit(cls, y) -> TargetScale:
        y = np.asarray(y, dtype=np.float64)
        lo, hi = float(y.min()), float(y.max())
        half = (hi - lo) / 2.0
        # zero-range targets keep unit scale so the bias alone can carry the fit
        return cls((hi + lo) / 2.0, half if half > 0 else 1.0)

    def normalize(self, y):
        return (np.asarray(y, dtype=np.float64) - self.center) / self.half_range

    def denormalize(self, z):
        return np.asarray(z, dtype=np.float64) * self.half_range + self.center

    def as_dict(self) -> dict:
        return {"center": self.center, "half_range": self.half_range}

    @classmethod
    def from_dict(cls, d: dict) -> TargetScale:
        return cls(float(d["center"]), float(d["half_range"]))


# ─────────────────────────────────────────────────────────────────────
# Splits
# ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class DataSplit:
    train: tuple[int, ...]
    validation: tuple[int, ...] = ()
    test: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.train:
            raise DataError("training partition is empty")
        parts = (set(self.train), set(self.validation), set(self.test))
        if sum(len(p) for p in parts) != len(self.train) + len(self.validation) + len(self.test):
            raise DataError("split partitions contain repeated indices")
        if parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2]:
            raise DataError("split partitions overlap")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.validation), len(self.test))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(data: Dataset, ratios: Sequence[float] = (5 / 7, 1 / 7, 1 / 7),
          seed: int = 42) -> DataSplit:
    """Seeded shuffle, then contiguous train / validation / test partition."""
    n = len(data)
    if n == 0:
        raise DataError("cannot split an empty dataset")
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise DataError(f"ratios must be three non-negative fractions, got {tuple(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"ratios must sum to 1, got {sum(ratios)!r}")

    n_val = _round_half_up(ratios[1] * n)
    n_test = _round_half_up(ratios[2] * n)
    n_train = n - n_val - n_test
    if n_train < 1:
        raise DataError(f"split leaves no training samples (N={n}, ratios={tuple(ratios)})")

    order = np.random.default_rng(seed).permutation(n)
    train = tuple(sorted(int(i) for i in order[:n_train]))
    val = tuple(sorted(int(i) for i in order[n_train:n_train + n_val]))
    test = tuple(sorted(int(i) for i in order[n_train + n_val:]))
    logger.debug(f"[DATA] split sizes=({n_train}, {n_val}, {n_test}) seed={seed}")
    return DataSplit(train, val, test)


def loocv_splits(data: Dataset) -> list[DataSplit]:
    n = len(data)
    if n < 2:
        raise DataError(f"leave-one-out needs at least 2 samples, got {n}")
    return [
        DataSplit(tuple(i for i in range(n) if i != k), (), (k,))
        for k in range(n)
    ]


def normalize_ratios(weights: Sequence[float]) -> tuple[float, float, float]:
    """Turn weights such as (5, 1, 1) into fractions summing to 1."""
    if len(weights) != 3 or any(w < 0 for w in weights) or sum(weights) <= 0:
        raise DataError(f"ratios must be three non-negative weights, got {tuple(weights)}")
    total = float(sum(weights))
    return (weights[0] / total, weights[1] / total, weights[2] / total)
