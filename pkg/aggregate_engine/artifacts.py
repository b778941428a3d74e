"""
artifacts.py — Model files, evaluation CSVs and predicted-vs-measured SVG plots.

Model file: UTF-8 JSON, format_version 1, written with orjson (floats rendered
as shortest round-trip decimals, so every parameter reloads bit-exactly).
See docs/model_file_format.md for the schema.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from xml.sax.saxutils import escape

import orjson

from .ann import MlpModel, TrainReport
from .config import LmConfig
from .dataset import Dataset, FeatureScaler, Target, TargetScale
from .errors import DataError, ModelFileError
from .evaluation import EvalReport, Model, ModelKind, model_kind
from .geotech import ValidityStatus
from .linreg import LinearModel

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
SUPPORTED_VERSIONS = frozenset({1})

_JSON_OPTS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_APPEND_NEWLINE


# ─────────────────────────────────────────────────────────────────────
# Provenance
# ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Provenance:
    timestamp: str
    dataset_fingerprint: str | None = None
    seed: int | None = None
    config: dict | None = None
    training: dict = field(default_factory=dict)


def make_provenance(dataset: Dataset | None = None,
                    config: LmConfig | None = None,
                    report: TrainReport | None = None,
                    fixed_timestamp: str | None = None,
                    **training) -> Provenance:
    """Provenance block; `fixed_timestamp` gives byte-reproducible files."""
    ts = fixed_timestamp or datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    if report is not None:
        training = {
            "stop_reason": report.stop_reason.value,
            "epochs_run": report.epochs_run,
            "final_train_mse": report.final_train_mse,
            "final_mu": report.final_mu,
            "n_train": report.n_train,
            "n_validation": report.n_validation,
            "warnings": list(report.warnings),
            **training,
        }
    # with restarts the report carries the config of the winning seed
    config_dict = report.config if report is not None and report.config else (
        config.model_dump() if config is not None else None)
    return Provenance(
        timestamp=ts,
        dataset_fingerprint=dataset.fingerprint() if dataset is not None else None,
        seed=config_dict["seed"] if config_dict else None,
        config=config_dict,
        training=training,
    )


# ─────────────────────────────────────────────────────────────────────
# Model files
# ─────────────────────────────────────────────────────────────────────

def _model_payload(model: Model) -> dict:
    if isinstance(model, MlpModel):
        if model.scaler is None or model.target_scale is None:
            raise DataError("cannot save an untrained network (no scaler / target scale)")
        return {
            "hidden_count": model.hidden_count,
            "hidden_activation": model.hidden_activation,
            "output_activation": model.output_activation,
            "w1": model.w1.tolist(),
            "b1": model.b1.tolist(),
            "w2": model.w2.tolist(),
            "b2": model.b2,
        }
    raw_intercept, raw_slopes = model.raw_units()
    return {
        "feature_space": "normalized",
        "intercept": model.intercept,
        "coefficients": list(model.coefficients),
        "raw_units": {"intercept": raw_intercept, "coefficients": list(raw_slopes)},
    }


def _write(data: bytes, destination) -> None:
    if destination is None:
        return
    try:
        Path(destination).write_bytes(data)
    except OSError as e:
        raise DataError(f"cannot write {destination}: {e.strerror or e}") from e
    logger.info(f"[ARTIFACT] Saved {destination} ({len(data)} bytes)")


def save_model(model: Model, destination=None,
               provenance: Provenance | None = None) -> bytes:
    parameters = _model_payload(model)
    doc = {
        "format_version": FORMAT_VERSION,
        "target": model.target.value,
        "model_kind": model_kind(model).value,
        "scaler": model.scaler.as_dict(),
        "target_scale": (model.target_scale.as_dict()
                         if isinstance(model, MlpModel) else None),
        "parameters": parameters,
        "provenance": asdict(provenance or make_provenance()),
    }
    data = orjson.dumps(doc, option=_JSON_OPTS)
    _write(data, destination)
    return data


def load_model(source) -> tuple[Model, Provenance]:
    """Read a model file from a path or raw bytes."""
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    else:
        try:
            raw = Path(source).read_bytes()
        except OSError as e:
            raise ModelFileError(f"cannot read model file {source}: {e.strerror or e}") from e
    try:
        doc = orjson.loads(raw)
    except orjson.JSONDecodeError as e:
        raise ModelFileError(f"model file is not valid JSON: {e.msg}", offset=e.pos) from None
    if not isinstance(doc, dict):
        raise ModelFileError("model file must hold a JSON object")

    version = doc.get("format_version")
    if version not in SUPPORTED_VERSIONS:
        raise ModelFileError(f"unsupported format_version {version!r}", version=version)

    try:
        target = Target(doc["target"])
        kind = ModelKind(doc["model_kind"])
        scaler = FeatureScaler.from_dict(doc["scaler"])
        params = doc["parameters"]
        if kind is ModelKind.ANN:
            hidden = int(params["hidden_count"])
            model: Model = MlpModel(
                target=target,
                w1=params["w1"], b1=params["b1"], w2=params["w2"], b2=params["b2"],
                scaler=scaler,
                target_scale=TargetScale.from_dict(doc["target_scale"]),
                hidden_activation=params["hidden_activation"],
                output_activation=params["output_activation"],
            )
            if model.hidden_count != hidden:
                raise ValueError(f"hidden_count {hidden} disagrees with w1 shape")
        else:
            model = LinearModel(
                target, float(params["intercept"]),
                tuple(float(c) for c in params["coefficients"]), scaler,
            )
            if len(model.coefficients) != 3:
                raise ValueError("expected 3 regression coefficients")
        prov = Provenance(**doc["provenance"])
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFileError(f"malformed model file: {e}") from None
    return model, prov


# ─────────────────────────────────────────────────────────────────────
# Evaluation CSV
# ─────────────────────────────────────────────────────────────────────

def export_eval_csv(report: EvalReport, destination=None) -> bytes:
    """Pairs as `id,measured_pct,predicted_pct,validity,extrapolated` plus `# key=value` metrics."""
    if not report.pairs:
        raise DataError("cannot export an empty evaluation report")
    body = report.to_frame().to_csv(index=False, lineterminator="\n")
    counts = report.status_counts
    metrics = {
        "target": report.target.value,
        "model_kind": report.model_kind.value,
        **{k: ("undefined" if v is None else repr(v))
           for k, v in report.metrics.as_dict().items()},
        "invalid_negative": counts[ValidityStatus.NEGATIVE_INVALID],
        "invalid_above_hundred": counts[ValidityStatus.ABOVE_HUNDRED_INVALID],
    }
    body += "".join(f"# {k}={v}\n" for k, v in metrics.items())
    data = body.encode("utf-8")
    _write(data, destination)
    return data


# ─────────────────────────────────────────────────────────────────────
# Scatter plot (SVG 1.1, 640×640)
# ─────────────────────────────────────────────────────────────────────

SVG_SIZE = 640
PLOT_LEFT = 90
PLOT_TOP = 70
PLOT_SIZE = 490
N_TICKS = 6


@dataclass(frozen=True)
class PlotFrame:
    """Shared measured/predicted axis range and its pixel mapping."""

    lo: float
    hi: float

    @classmethod
    def for_report(cls, report: EvalReport) -> PlotFrame:
        values = [v for p in report.pairs for v in (p.measured, p.predicted)]
        lo, hi = min(values), max(values)
        if hi - lo <= 0:
            lo, hi = lo - 1.0, hi + 1.0
        pad = 0.05 * (hi - lo)
        return cls(lo - pad, hi + pad)

    def px(self, v: float) -> float:
        return PLOT_LEFT + (v - self.lo) / (self.hi - self.lo) * PLOT_SIZE

    def py(self, v: float) -> float:
        return PLOT_TOP + PLOT_SIZE - (v - self.lo) / (self.hi - self.lo) * PLOT_SIZE


def _title(report: EvalReport) -> str:
    def r2(v):
        return "n/a" if v is None else f"{v:.3f}"
    return (f"{report.target.label} — {report.model_kind.name}: "
            f"R²cod={r2(report.r2_cod)} R²pearson={r2(report.r2_pearson)}")


def export_scatter(report: EvalReport, destination=None) -> bytes:
    """Predicted vs measured with the dashed identity line (Line 1)."""
    if not report.pairs:
        raise DataError("cannot plot an empty evaluation report")
    f = PlotFrame.for_report(report)
    label = report.target.label
    right, bottom = PLOT_LEFT + PLOT_SIZE, PLOT_TOP + PLOT_SIZE

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
        "<style>",
        ".axis { stroke: #333333; stroke-width: 1; }",
        ".grid { stroke: #dddddd; stroke-width: 1; }",
        ".line1 { stroke: #888888; stroke-width: 1.5; stroke-dasharray: 6,4; }",
        ".marker { fill: #2196F3; stroke: #0D47A1; stroke-width: 1; }",
        ".marker-invalid { fill: #F44336; stroke: #B71C1C; stroke-width: 1; }",
        "text { font-family: sans-serif; font-size: 12px; fill: #222222; }",
        ".title { font-size: 15px; }",
        "</style>",
        f'<rect x="0" y="0" width="{SVG_SIZE}" height="{SVG_SIZE}" fill="#ffffff"/>',
        f'<text class="title" x="{SVG_SIZE / 2:.2f}" y="36" text-anchor="middle">'
        f"{escape(_title(report))}</text>",
    ]

    for k in range(N_TICKS):
        v = f.lo + (f.hi - f.lo) * k / (N_TICKS - 1)
        x, y = f.px(v), f.py(v)
        out += [
            f'<line class="grid" x1="{x:.2f}" y1="{PLOT_TOP}" x2="{x:.2f}" y2="{bottom}"/>',
            f'<line class="grid" x1="{PLOT_LEFT}" y1="{y:.2f}" x2="{right}" y2="{y:.2f}"/>',
            f'<text x="{x:.2f}" y="{bottom + 18}" text-anchor="middle">{v:.1f}</text>',
            f'<text x="{PLOT_LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{v:.1f}</text>',
        ]

    out += [
        f'<rect class="axis" x="{PLOT_LEFT}" y="{PLOT_TOP}" width="{PLOT_SIZE}" '
        f'height="{PLOT_SIZE}" fill="none"/>',
        f'<line class="line1" x1="{f.px(f.lo):.2f}" y1="{f.py(f.lo):.2f}" '
        f'x2="{f.px(f.hi):.2f}" y2="{f.py(f.hi):.2f}"/>',
        f'<text x="{right - 6}" y="{PLOT_TOP + 16}" text-anchor="end">Line 1</text>',
        f'<text x="{PLOT_LEFT + PLOT_SIZE / 2:.2f}" y="{bottom + 44}" '
        f'text-anchor="middle">Measured {label} (%)</text>',
        f'<text x="28" y="{PLOT_TOP + PLOT_SIZE / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 28 {PLOT_TOP + PLOT_SIZE / 2:.2f})">Predicted {label} (%)</text>',
    ]

    for p in report.pairs:
        cls = "marker" if p.validity.is_valid else "marker-invalid"
        out.append(
            f'<circle class="{cls}" cx="{f.px(p.measured):.2f}" cy="{f.py(p.predicted):.2f}" '
            f'r="5"><title>{escape(p.sample_id)}</title></circle>'
        )
    out.append("</svg>")

    data = ("\n".join(out) + "\n").encode("utf-8")
    _write(data, destination)
    return data
