"""
evaluation.py — Goodness-of-fit metrics and predicted-vs-measured reports.

Both R² readings are reported: the coefficient of determination (1 − SS_res/SS_tot,
negative on poor held-out data) and the squared Pearson correlation of predicted
against measured (blind to affine bias). All metrics are in percent space.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .ann import MlpModel
from .dataset import Dataset, Target
from .errors import DataError
from .geotech import ValidityFlag, ValidityStatus, check_validity
from .linreg import LinearModel

logger = logging.getLogger(__name__)

Model = LinearModel | MlpModel


class ModelKind(Enum):
    OLS = "ols"
    ANN = "ann"


def model_kind(model: Model) -> ModelKind:
    return ModelKind.ANN if isinstance(model, MlpModel) else ModelKind.OLS


def predict_batch(model: Model, features) -> tuple[np.ndarray, np.ndarray]:
    """Predicted percent values and extrapolation flags for raw features (N, 3)."""
    x = np.asarray(features, dtype=np.float64).reshape(-1, 3)
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite feature value")
    if isinstance(model, MlpModel):
        values = model.predict_percent(x)
    else:
        values = model.predict_normalized(model.scaler.apply(x))
    return np.asarray(values, dtype=np.float64), np.atleast_1d(model.scaler.is_extrapolated(x))


# ─────────────────────────────────────────────────────────────────────
# Metrics
# ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FitMetrics:
    n: int
    r2_cod: float | None          # undefined when measured variance is zero
    r2_pearson: float | None      # undefined when either side has zero variance
    rmse: float
    mean_abs_line1_deviation: float

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "r2_cod": self.r2_cod,
            "r2_pearson": self.r2_pearson,
            "rmse": self.rmse,
            "mean_abs_line1_deviation": self.mean_abs_line1_deviation,
        }


def evaluate(measured: Sequence[float], predicted: Sequence[float]) -> FitMetrics:
    m = np.asarray(measured, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if m.shape != p.shape or m.ndim != 1:
        raise DataError(f"measured/predicted length mismatch: {m.shape} vs {p.shape}")
    if m.size == 0:
        raise DataError("cannot evaluate zero pairs")

    resid = p - m
    ss_res = float(resid @ resid)
    rmse = math.sqrt(ss_res / m.size)
    mad = float(np.mean(np.abs(resid)))

    dm = m - m.mean()
    dp = p - p.mean()
    ss_tot = float(dm @ dm)
    ss_pred = float(dp @ dp)
    r2_cod = 1.0 - ss_res / ss_tot if ss_tot > 0 else None
    r2_pearson = None
    if ss_tot > 0 and ss_pred > 0:
        r = float(dm @ dp) / math.sqrt(ss_tot * ss_pred)
        r2_pearson = min(1.0, max(0.0, r * r))
    if r2_cod is None:
        logger.warning("[EVAL] measured values have zero variance; R² undefined")
    return FitMetrics(int(m.size), r2_cod, r2_pearson, rmse, mad)


# ─────────────────────────────────────────────────────────────────────
# Reports
# ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PredictionPair:
    sample_id: str
    measured: float
    predicted: float
    validity: ValidityFlag
    extrapolated: bool


def screen_predictions(
    pairs: Iterable[tuple[str, float, float, bool]],
) -> tuple[tuple[PredictionPair, ...], Counter]:
    """Attach a ValidityFlag to each (id, measured, predicted, extrapolated) tuple."""
    screened = tuple(
        PredictionPair(sid, float(m), float(p), check_validity(float(p)), bool(x))
        for sid, m, p, x in pairs
    )
    counts = Counter({status: 0 for status in ValidityStatus})
    counts.update(pair.validity.status for pair in screened)
    return screened, counts


@dataclass(frozen=True)
class EvalReport:
    target: Target
    model_kind: ModelKind
    pairs: tuple[PredictionPair, ...]
    metrics: FitMetrics

    @property
    def r2_cod(self) -> float | None:
        return self.metrics.r2_cod

    @property
    def r2_pearson(self) -> float | None:
        return self.metrics.r2_pearson

    @property
    def rmse(self) -> float:
        return self.metrics.rmse

    @property
    def status_counts(self) -> Counter:
        counts = Counter({status: 0 for status in ValidityStatus})
        counts.update(p.validity.status for p in self.pairs)
        return counts

    @property
    def extrapolated_count(self) -> int:
        return sum(p.extrapolated for p in self.pairs)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "id": [p.sample_id for p in self.pairs],
            "measured_pct": [p.measured for p in self.pairs],
            "predicted_pct": [p.predicted for p in self.pairs],
            "validity": [p.validity.status.value for p in self.pairs],
            "extrapolated": ["true" if p.extrapolated else "false" for p in self.pairs],
        })


def build_report(target: Target, kind: ModelKind,
                 pairs: Iterable[tuple[str, float, float, bool]]) -> EvalReport:
    screened, counts = screen_predictions(pairs)
    if not screened:
        raise DataError("no prediction pairs to evaluate")
    metrics = evaluate([p.measured for p in screened], [p.predicted for p in screened])
    invalid = len(screened) - counts[ValidityStatus.VALID]
    if invalid:
        logger.warning(f"[EVAL] {invalid} physically invalid {target.label} prediction(s)")
    return EvalReport(target, kind, screened, metrics)


def evaluate_model(model: Model, dataset: Dataset,
                   indices: Sequence[int] | None = None) -> EvalReport:
    """Predict every sample (optionally a subset) carrying the model's target."""
    data = dataset if indices is None else dataset.subset(indices)
    data = data.with_target(model.target)
    if len(data) == 0:
        raise DataError(f"no samples with measured {model.target.label} to evaluate")
    predicted, extrapolated = predict_batch(model, data.features())
    measured = data.targets(model.target)
    return build_report(
        model.target, model_kind(model),
        zip(data.ids, measured, predicted, extrapolated),
    )


def compare_reports(ols: EvalReport, ann: EvalReport) -> ModelKind:
    """Family whose predictions sit closer to Line 1 (lower RMSE, ties → OLS)."""
    return ModelKind.ANN if ann.rmse < ols.rmse else ModelKind.OLS


# ─────────────────────────────────────────────────────────────────────
# Rendering
# ─────────────────────────────────────────────────────────────────────

def _fmt(v: float | None, spec: str = ".3f") -> str:
    return "undefined" if v is None else format(v, spec)


def summary_line(report: EvalReport, prefix: dict | None = None) -> str:
    counts = report.status_counts
    tokens = dict(prefix or {})
    tokens.update({
        "target": report.target.value,
        "model": report.model_kind.value,
        "n": report.metrics.n,
        "r2_cod": _fmt(report.r2_cod),
        "r2_pearson": _fmt(report.r2_pearson),
        "rmse": _fmt(report.rmse, ".2f"),
        "mad_line1": _fmt(report.metrics.mean_abs_line1_deviation, ".2f"),
        "invalid_negative": counts[ValidityStatus.NEGATIVE_INVALID],
        "invalid_above_hundred": counts[ValidityStatus.ABOVE_HUNDRED_INVALID],
        "extrapolated": report.extrapolated_count,
    })
    return " ".join(f"{k}={v}" for k, v in tokens.items())


def render_table(report: EvalReport, title: str = "EVALUATION") -> str:
    """Console table of pairs and metrics."""
    w = 72
    lines = [
        f"  {'═' * w}",
        f"  {f'{title} — {report.target.label} / {report.model_kind.name}':^{w}}",
        f"  {'═' * w}",
        f"  {'Sample':<12} {'Measured%':>10} {'Predicted%':>11} {'Δ':>8}  {'Validity':<22} Extrap",
        f"  {'─' * w}",
    ]
    for p in report.pairs:
        lines.append(
            f"  {p.sample_id:<12} {p.measured:>10.2f} {p.predicted:>11.2f} "
            f"{p.predicted - p.measured:>8.2f}  {p.validity.status.name:<22} "
            f"{'yes' if p.extrapolated else 'no'}"
        )
    m = report.metrics
    counts = report.status_counts
    lines += [
        f"  {'─' * w}",
        f"  R² (determination) : {_fmt(m.r2_cod, '.4f')}",
        f"  R² (Pearson²)      : {_fmt(m.r2_pearson, '.4f')}",
        f"  RMSE               : {m.rmse:.4f} %",
        f"  Mean |Δ| to Line 1 : {m.mean_abs_line1_deviation:.4f} %",
        f"  Invalid (<0 / >100): {counts[ValidityStatus.NEGATIVE_INVALID]} / "
        f"{counts[ValidityStatus.ABOVE_HUNDRED_INVALID]}",
        f"  {'═' * w}",
    ]
    return "\n".join(lines)
