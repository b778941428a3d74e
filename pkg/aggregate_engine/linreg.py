"""
linreg.py — Multiple linear regression baseline.

y = b0 + b_v·v̂ + b_d·d̂ + b_p·p̂ over min-max normalized features, solved by
column-pivoted Householder QR. Rank deficiency is an error, never silently
regularized.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .dataset import Dataset, FeatureScaler, Prediction, Target, fit_scaler
from .errors import DataError, NumericalError

logger = logging.getLogger(__name__)

MIN_SAMPLES = 4   # intercept + 3 slopes


@dataclass(frozen=True)
class LinearModel:
    target: Target
    intercept: float
    coefficients: tuple[float, float, float]   # velocity, density, porosity (normalized)
    scaler: FeatureScaler

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.intercept, *self.coefficients)):
            raise NumericalError("linear model parameters must be finite")

    @property
    def params(self) -> np.ndarray:
        return np.array([self.intercept, *self.coefficients], dtype=np.float64)

    def predict_normalized(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        return self.intercept + z @ np.asarray(self.coefficients, dtype=np.float64)

    def raw_units(self) -> tuple[float, tuple[float, float, float]]:
        """Intercept and slopes against raw m/s, g/cm³ and % inputs."""
        lo = np.asarray(self.scaler.mins)
        span = np.asarray(self.scaler.maxs) - lo
        b = np.asarray(self.coefficients)
        slopes = 2.0 * b / span
        intercept = self.intercept - float(np.sum(b * (2.0 * lo / span + 1.0)))
        return float(intercept), tuple(float(s) for s in slopes)


def _design(z: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(len(z)), z])


def fit_ols(data: Dataset, target: Target,
            scaler: FeatureScaler | None = None) -> LinearModel:
    """Least-squares fit on the samples carrying `target`."""
    usable = data.with_target(target)
    n = len(usable)
    if n < MIN_SAMPLES:
        raise DataError(
            f"need ≥ {MIN_SAMPLES} samples with {target.label} to fit OLS, got {n}"
        )
    scaler = scaler or fit_scaler(usable)
    X = _design(scaler.apply(usable.features()))
    y = usable.targets(target)

    Q, R, piv = sla.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(X.shape) * np.finfo(np.float64).eps * diag[0]
    rank = int(np.sum(diag > tol))
    if rank < X.shape[1]:
        raise DataError(
            f"design matrix is rank deficient (rank {rank} < {X.shape[1]}); "
            "features are collinear over these samples"
        )

    beta_piv = sla.solve_triangular(R, Q.T @ y, lower=False)
    beta = np.empty_like(beta_piv)
    beta[piv] = beta_piv

    model = LinearModel(target, float(beta[0]), tuple(float(b) for b in beta[1:]), scaler)
    logger.info(
        f"[OLS] {target.label}: n={n} intercept={model.intercept:.4f} "
        f"slopes={tuple(round(c, 4) for c in model.coefficients)}"
    )
    return model


def predict_linear(model: LinearModel, features) -> Prediction:
    x = np.asarray(features, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite feature in {tuple(x)}")
    value = float(model.predict_normalized(model.scaler.apply(x)))
    return Prediction(value, bool(model.scaler.is_extrapolated(x)))


def training_sse(model: LinearModel, data: Dataset) -> float:
    usable = data.with_target(model.target)
    resid = usable.targets(model.target) - model.predict_normalized(
        model.scaler.apply(usable.features())
    )
    return float(resid @ resid)
