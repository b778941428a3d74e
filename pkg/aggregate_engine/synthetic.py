"""
synthetic.py — Seeded generators for test and demonstration datasets.

Usage:
    python -m aggregate_engine.synthetic data/carbonate_7.csv          # bundled desk dataset
    python -m aggregate_engine.synthetic out.csv --n 12 --seed 3 --noise 0.5
"""

from __future__ import annotations

import argparse
import logging
from typing import Sequence

import numpy as np

from .dataset import Dataset, FeatureScaler, RockSample

logger = logging.getLogger(__name__)

# Raw feature envelope of the generated carbonates
VELOCITY_RANGE = (3500.0, 6500.0)     # m/s
DENSITY_RANGE = (2.30, 2.80)          # g/cm³
POROSITY_RANGE = (0.5, 12.0)          # %

_ENVELOPE = FeatureScaler(
    (VELOCITY_RANGE[0], DENSITY_RANGE[0], POROSITY_RANGE[0]),
    (VELOCITY_RANGE[1], DENSITY_RANGE[1], POROSITY_RANGE[1]),
)


def linear_dataset(n: int = 10, seed: int = 0, intercept: float = 5.0,
                   slopes: Sequence[float] = (2.0, 3.0, -1.0),
                   interior: float = 0.5) -> Dataset:
    """
    LA and MDE both equal intercept + slopes · ẑ, ẑ being the dataset's own
    min-max normalized features. Rows 0 and 1 pin every feature's min and max
    at the corners (−1, +1, −1) and (+1, −1, +1); the rest are drawn inside
    [−interior, +interior].
    """
    if n < 4:
        raise ValueError(f"linear_dataset needs n ≥ 4, got {n}")
    rng = np.random.default_rng(seed)
    z = np.empty((n, 3))
    z[0] = (-1.0, 1.0, -1.0)
    z[1] = (1.0, -1.0, 1.0)
    z[2:] = rng.uniform(-interior, interior, size=(n - 2, 3))
    raw = _ENVELOPE.invert(z)
    y = intercept + z @ np.asarray(slopes, dtype=np.float64)
    samples = tuple(
        RockSample(f"L{i + 1:02d}", float(v), float(d), float(p), float(t), float(t))
        for i, ((v, d, p), t) in enumerate(zip(raw, y))
    )
    return Dataset(samples, grain_class="synthetic-linear")


def carbonate_dataset(n: int = 7, seed: int = 42, noise: float = 1.0) -> Dataset:
    """
    Carbonate-like samples: velocity spread evenly over 3800–5950 m/s, denser
    and less porous as velocity rises, LA and MDE falling with velocity plus
    seeded Gaussian noise (percent points).
    """
    if n < 2:
        raise ValueError(f"carbonate_dataset needs n ≥ 2, got {n}")
    rng = np.random.default_rng(seed)
    v = np.linspace(3800.0, 5950.0, n)
    t = (v - v[0]) / (v[-1] - v[0])
    density = 2.47 + 0.24 * t + rng.normal(0.0, 0.01, n)
    porosity = np.clip(8.6 - 7.2 * t + rng.normal(0.0, 0.3, n), 0.1, None)
    la = np.clip(52.0 - 0.0057 * v + rng.normal(0.0, noise, n), 0.0, 100.0)
    mde = np.clip(45.0 - 0.0062 * v + rng.normal(0.0, noise, n), 0.0, 100.0)
    samples = tuple(
        RockSample(
            f"S{i + 1}", round(float(v[i]), 1), round(float(density[i]), 3),
            round(float(porosity[i]), 2), round(float(la[i]), 2), round(float(mde[i]), 2),
        )
        for i in range(n)
    )
    return Dataset(samples, grain_class="10/14")


# Training rows follow mde = 65 − 0.012·v exactly; the held-out sample sits
# 1000 m/s beyond the fastest one, where the fitted trend crosses zero.
_NEGATIVE_MDE_TRAIN = (
    ("T1", 4000.0, 2.50, 6.0, 17.0),
    ("T2", 4200.0, 2.62, 5.1, 14.6),
    ("T3", 4400.0, 2.55, 3.9, 12.2),
    ("T4", 4600.0, 2.68, 4.6, 9.8),
    ("T5", 4800.0, 2.58, 2.7, 7.4),
    ("T6", 5000.0, 2.66, 3.3, 5.0),
)
_NEGATIVE_MDE_HELD_OUT = (("H1", 6000.0, 2.70, 2.0, 3.0),)


def negative_mde_dataset() -> tuple[Dataset, Dataset]:
    """(training, held-out): OLS on the first predicts −7 % MDE for the second."""
    def build(rows):
        return Dataset(tuple(RockSample(sid, v, d, p, mde=m) for sid, v, d, p, m in rows))
    return build(_NEGATIVE_MDE_TRAIN), build(_NEGATIVE_MDE_HELD_OUT)


def write_csv(dataset: Dataset, destination=None) -> bytes:
    data = dataset.to_csv_bytes()
    if destination is not None:
        with open(destination, "wb") as f:
            f.write(data)
        logger.info(f"[DATA] Wrote {len(dataset)} samples to {destination}")
    return data


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    p = argparse.ArgumentParser(description="Write a seeded carbonate dataset as CSV")
    p.add_argument("out", help="Destination CSV path")
    p.add_argument("--n", type=int, default=7, help="Number of samples (default: 7)")
    p.add_argument("--seed", type=int, default=42, help="Noise seed (default: 42)")
    p.add_argument("--noise", type=float, default=1.0,
                   help="LA / MDE noise standard deviation in percent points (default: 1.0)")
    return p.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    write_csv(carbonate_dataset(args.n, args.seed, args.noise), args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
