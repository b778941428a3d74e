"""
main.py — Command-line entrypoint for the aggregate quality toolkit.

Usage:
    python -m aggregate_engine coeff --total-mass 500 --fines-mass 140 --kind la
    python -m aggregate_engine fit --data data/carbonate_7.csv --target la --model ann --out la_ann.json
    python -m aggregate_engine evaluate --data data/carbonate_7.csv --model la_ann.json --plot la.svg --csv la.csv
    python -m aggregate_engine predict --model la_ann.json --velocity 5000 --density 2.65 --porosity 3.1
    python -m aggregate_engine loocv --data data/carbonate_7.csv --target mde --model ols
    python -m aggregate_engine plot --data data/carbonate_7.csv --model la_ann.json --out la.svg
    python -m aggregate_engine compare --data data/carbonate_7.csv --target la

Exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical failure.
Summary lines on stdout are space-separated key=value tokens; logs go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from pydantic import ValidationError

from .ann import MlpModel, TrainReport, predict_ann, train_lm_restarts
from .artifacts import export_eval_csv, export_scatter, load_model, make_provenance, save_model
from .config import LmConfig, PipelineSettings
from .dataset import (
    Dataset, DataSplit, RockSample, Target, load_csv_path, loocv_splits,
    normalize_ratios, split,
)
from .errors import AggregateEngineError, DataError, UsageError
from .evaluation import (
    EvalReport, Model, ModelKind, build_report, compare_reports, evaluate_model,
    predict_batch, render_table, summary_line,
)
from .geotech import AttritionKind, AttritionTestRecord, attrition_coefficient, check_validity
from .linreg import fit_ols, predict_linear

logger = logging.getLogger("main")

LOG_FORMAT = "%(asctime)s [%(name)s] %(levelname)s: %(message)s"

# CLI flag → LmConfig field
LM_FLAGS = {
    "hidden": "hidden_count",
    "seed": "seed",
    "mu0": "mu0",
    "mu_inc": "mu_inc",
    "mu_dec": "mu_dec",
    "mu_max": "mu_max",
    "max_epochs": "max_epochs",
    "goal_mse": "goal_mse",
    "min_grad": "min_grad",
    "max_val_fail": "max_val_fail",
}


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ── CLI ───────────────────────────────────────────────────────────────────────

def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--target", required=True, choices=[t.value for t in Target])
    p.add_argument("--ratios", help="Train,validation,test weights (default: 5,1,1)")
    p.add_argument("--split-seed", type=int, help="Shuffle seed for the split (default: 42)")
    g = p.add_argument_group("network / Levenberg-Marquardt")
    g.add_argument("--hidden", type=int, help="Hidden neurons H (default: 5)")
    g.add_argument("--seed", type=int, help="Weight initialization seed (default: 0)")
    g.add_argument("--restarts", type=int, help="Random restarts, best kept (default: 1)")
    g.add_argument("--workers", type=int, help="Thread pool width (default: 1)")
    g.add_argument("--mu0", type=float)
    g.add_argument("--mu-inc", type=float)
    g.add_argument("--mu-dec", type=float)
    g.add_argument("--mu-max", type=float)
    g.add_argument("--max-epochs", type=int)
    g.add_argument("--goal-mse", type=float)
    g.add_argument("--min-grad", type=float)
    g.add_argument("--max-val-fail", type=int)


def build_parser() -> CliParser:
    p = CliParser(prog="aggregate_engine",
                  description="LA / Micro-Deval coefficient prediction toolkit")
    p.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                   help="Logging verbosity on stderr (default: AGG_LOG_LEVEL or INFO)")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeff", help="Coefficient from attrition test masses")
    c.add_argument("--total-mass", type=float, required=True, help="M, grams")
    c.add_argument("--fines-mass", type=float, required=True, help="m, grams < 1.6 mm")
    c.add_argument("--kind", required=True, choices=[k.value for k in AttritionKind])
    c.set_defaults(handler=run_coeff)

    f = sub.add_parser("fit", help="Fit one model for one target")
    f.add_argument("--data", required=True)
    f.add_argument("--model", required=True, choices=[k.value for k in ModelKind])
    f.add_argument("--out", required=True, help="Model file to write")
    f.add_argument("--fixed-timestamp", help="Provenance timestamp (byte-reproducible files)")
    _add_model_flags(f)
    f.set_defaults(handler=run_fit)

    e = sub.add_parser("evaluate", help="Evaluate a model file on a dataset")
    e.add_argument("--data", required=True)
    e.add_argument("--model", required=True, help="Model file")
    e.add_argument("--plot", help="Scatter SVG to write")
    e.add_argument("--csv", help="Evaluation CSV to write")
    e.set_defaults(handler=run_evaluate)

    pr = sub.add_parser("predict", help="Predict from features")
    pr.add_argument("--model", required=True, help="Model file")
    pr.add_argument("--velocity", help="m/s")
    pr.add_argument("--density", help="g/cm³")
    pr.add_argument("--porosity", help="%%")
    pr.add_argument("--data", help="CSV of samples to predict (targets may be empty)")
    pr.set_defaults(handler=run_predict)

    lo = sub.add_parser("loocv", help="Leave-one-out cross-validation")
    lo.add_argument("--data", required=True)
    lo.add_argument("--model", required=True, choices=[k.value for k in ModelKind])
    lo.add_argument("--csv", help="Pooled held-out evaluation CSV to write")
    _add_model_flags(lo)
    lo.set_defaults(handler=run_loocv)

    pl = sub.add_parser("plot", help="Predicted-vs-measured scatter SVG")
    pl.add_argument("--data", required=True)
    pl.add_argument("--model", required=True, help="Model file")
    pl.add_argument("--out", required=True, help="SVG to write")
    pl.set_defaults(handler=run_plot)

    cm = sub.add_parser("compare", help="OLS against ANN on the same split")
    cm.add_argument("--data", required=True)
    _add_model_flags(cm)
    cm.set_defaults(handler=run_compare)
    return p


# ── Shared plumbing ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FitPlan:
    """Everything a fit needs besides the data."""

    target: Target
    ratios: tuple[float, float, float]
    split_seed: int
    config: LmConfig
    restarts: int
    workers: int


def _parse_ratios(text: str) -> tuple[float, float, float]:
    try:
        weights = [float(w) for w in text.split(",")]
    except ValueError:
        raise UsageError(f"--ratios expects three comma-separated numbers, got {text!r}") from None
    if len(weights) != 3 or not all(math.isfinite(w) for w in weights):
        raise UsageError(f"--ratios expects three comma-separated numbers, got {text!r}")
    try:
        return normalize_ratios(weights)
    except DataError as e:
        raise UsageError(str(e)) from None


def _plan(args, settings: PipelineSettings) -> FitPlan:
    overrides = {
        field: getattr(args, flag)
        for flag, field in LM_FLAGS.items()
        if getattr(args, flag) is not None
    }
    restarts = args.restarts if args.restarts is not None else settings.restarts
    workers = args.workers if args.workers is not None else settings.workers
    if restarts < 1 or workers < 1:
        raise UsageError("--restarts and --workers must be ≥ 1")
    return FitPlan(
        target=Target(args.target),
        ratios=_parse_ratios(args.ratios) if args.ratios else normalize_ratios(settings.ratios),
        split_seed=args.split_seed if args.split_seed is not None else settings.split_seed,
        config=LmConfig(**overrides),
        restarts=restarts,
        workers=workers,
    )


def _usable(data: Dataset, target: Target) -> Dataset:
    usable = data.with_target(target)
    if len(usable) == 0:
        raise DataError(f"dataset has no measured {target.label} values")
    if len(usable) < len(data):
        logger.warning(f"[CLI] {len(data) - len(usable)} sample(s) without "
                       f"{target.label} ignored")
    return usable


def _fit(kind: ModelKind, usable: Dataset, data_split: DataSplit,
         plan: FitPlan) -> tuple[Model, TrainReport | None]:
    """OLS on train ∪ validation; the network on train with validation early stopping."""
    if kind is ModelKind.OLS:
        fit_idx = data_split.train + data_split.validation
        return fit_ols(usable.subset(fit_idx), plan.target), None
    return train_lm_restarts(usable, data_split, plan.target, plan.config,
                             restarts=plan.restarts, workers=plan.workers)


def _kv(**tokens) -> str:
    return " ".join(f"{k}={v}" for k, v in tokens.items())


def _ratio_text(ratios) -> str:
    return ",".join(f"{r:.6f}" for r in ratios)


# ── Subcommands ───────────────────────────────────────────────────────────────

def run_coeff(args, settings: PipelineSettings) -> int:
    kind = AttritionKind(args.kind)
    value = attrition_coefficient(AttritionTestRecord(args.total_mass, args.fines_mass, kind))
    print(f"{kind.name}={value:.2f}")
    return 0


def run_fit(args, settings: PipelineSettings) -> int:
    plan = _plan(args, settings)
    kind = ModelKind(args.model)
    data = load_csv_path(args.data)
    usable = _usable(data, plan.target)
    data_split = split(usable, plan.ratios, seed=plan.split_seed)
    model, report = _fit(kind, usable, data_split, plan)

    training = {"model_kind": kind.value, "ratios": list(plan.ratios),
                "split_seed": plan.split_seed, "restarts": plan.restarts}
    provenance = make_provenance(
        data, plan.config if kind is ModelKind.ANN else None, report,
        fixed_timestamp=args.fixed_timestamp or settings.fixed_timestamp, **training,
    )
    save_model(model, args.out, provenance)

    n_train, n_val, n_test = data_split.sizes
    print(_kv(fit=plan.target.value, model=kind.value, n_samples=len(usable),
              n_train=n_train, n_validation=n_val, n_test=n_test,
              ratios=_ratio_text(plan.ratios), split_seed=plan.split_seed))
    if report is not None:
        print(_kv(config="lm", restarts=plan.restarts,
                  **{k: v for k, v in plan.config.model_dump().items()}))
        print(_kv(train="lm", stop_reason=report.stop_reason.value,
                  epochs_run=report.epochs_run, final_mu=f"{report.final_mu:.3e}",
                  final_train_mse=f"{report.final_train_mse:.6e}",
                  best_epoch=report.best_epoch if report.best_epoch is not None else "none"))

    fit_idx = data_split.train + (data_split.validation if kind is ModelKind.OLS else ())
    print(summary_line(evaluate_model(model, usable, fit_idx), {"split": "train"}))
    if data_split.validation and kind is ModelKind.ANN:
        print(summary_line(evaluate_model(model, usable, data_split.validation),
                           {"split": "validation"}))
    if data_split.test:
        print(summary_line(evaluate_model(model, usable, data_split.test), {"split": "test"}))
    return 0


def _evaluate_file(args) -> EvalReport:
    model, _ = load_model(args.model)
    data = load_csv_path(args.data)
    return evaluate_model(model, _usable(data, model.target))


def run_evaluate(args, settings: PipelineSettings) -> int:
    report = _evaluate_file(args)
    print(render_table(report))
    print(summary_line(report))
    if args.plot:
        export_scatter(report, args.plot)
    if args.csv:
        export_eval_csv(report, args.csv)
    return 0


def run_plot(args, settings: PipelineSettings) -> int:
    report = _evaluate_file(args)
    export_scatter(report, args.out)
    print(summary_line(report))
    return 0


def _parse_feature(name: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"unparseable {name} {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{name} must be finite, got {text!r}")
    return value


def run_predict(args, settings: PipelineSettings) -> int:
    single = (args.velocity, args.density, args.porosity)
    if args.data is not None and any(v is not None for v in single):
        raise UsageError("give either --data or --velocity/--density/--porosity, not both")
    model, _ = load_model(args.model)

    if args.data is None:
        if any(v is None for v in single):
            raise UsageError("--velocity, --density and --porosity are all required")
        sample = RockSample("-", *(_parse_feature(n, t) for n, t in
                                   zip(("velocity", "density", "porosity"), single)))
        predict = predict_ann if isinstance(model, MlpModel) else predict_linear
        pred = predict(model, sample.features)
        rows = [(sample.id, pred.value, pred.extrapolated)]
    else:
        data = load_csv_path(args.data)
        if len(data) == 0:
            raise DataError("no samples to predict")
        values, flags = predict_batch(model, data.features())
        rows = [(sid, float(v), bool(x)) for sid, v, x in zip(data.ids, values, flags)]

    for sid, value, extrapolated in rows:
        flag = check_validity(value)
        if extrapolated:
            logger.warning(f"[CLI] sample {sid}: features outside the fitted range")
        print(_kv(id=sid, target=model.target.value, predicted=f"{value:.2f}",
                  validity=flag.status.value, extrapolated=str(extrapolated).lower()))
    return 0


@dataclass(frozen=True)
class FoldResult:
    fold: int
    sample_id: str
    measured: float
    predicted: float | None
    extrapolated: bool
    error: AggregateEngineError | None = None


def run_loocv(args, settings: PipelineSettings) -> int:
    plan = _plan(args, settings)
    kind = ModelKind(args.model)
    usable = _usable(load_csv_path(args.data), plan.target)
    folds = loocv_splits(usable)

    # folds share the pool; restarts inside a fold stay sequential
    fold_plan = replace(plan, workers=1)

    def run_fold(k: int) -> FoldResult:
        sample = usable.samples[folds[k].test[0]]
        measured = sample.target(plan.target)
        try:
            model, _ = _fit(kind, usable, DataSplit(folds[k].train), fold_plan)
            values, extrap = predict_batch(model, [sample.features])
            return FoldResult(k + 1, sample.id, measured, float(values[0]), bool(extrap[0]))
        except AggregateEngineError as e:
            logger.warning(f"[LOOCV] fold {k + 1} ({sample.id}) failed: {e}")
            return FoldResult(k + 1, sample.id, measured, None, False, e)

    if plan.workers > 1:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            results = list(pool.map(run_fold, range(len(folds))))
    else:
        results = [run_fold(k) for k in range(len(folds))]

    for r in results:
        if r.error is None:
            print(_kv(fold=r.fold, id=r.sample_id, measured=f"{r.measured:.2f}",
                      predicted=f"{r.predicted:.2f}", status="ok",
                      extrapolated=str(r.extrapolated).lower()))
        else:
            print(_kv(fold=r.fold, id=r.sample_id, measured=f"{r.measured:.2f}",
                      status="failed", error=type(r.error).__name__))

    done = [r for r in results if r.error is None]
    if not done:
        raise results[0].error
    if len(done) < len(results):
        logger.warning(f"[LOOCV] pooled metrics over {len(done)} of {len(results)} folds")
    report = build_report(plan.target, kind,
                          ((r.sample_id, r.measured, r.predicted, r.extrapolated) for r in done))
    print(_kv(loocv=plan.target.value, model=kind.value, folds=len(results),
              completed=len(done), failed=len(results) - len(done)))
    print(summary_line(report, {"split": "loocv"}))
    if args.csv:
        export_eval_csv(report, args.csv)
    return 0


def run_compare(args, settings: PipelineSettings) -> int:
    plan = _plan(args, settings)
    usable = _usable(load_csv_path(args.data), plan.target)
    data_split = split(usable, plan.ratios, seed=plan.split_seed)
    scope, idx = ("test", data_split.test) if data_split.test else ("all", None)

    reports = {}
    for kind in (ModelKind.OLS, ModelKind.ANN):
        model, _ = _fit(kind, usable, data_split, plan)
        reports[kind] = evaluate_model(model, usable, idx)
        print(summary_line(reports[kind], {"split": scope}))
    better = compare_reports(reports[ModelKind.OLS], reports[ModelKind.ANN])
    print(_kv(compare=plan.target.value, split=scope, better=better.value))
    return 0


# ── Entry point ───────────────────────────────────────────────────────────────

def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        settings = PipelineSettings()
        logging.basicConfig(
            level=args.log_level or settings.log_level.upper(),
            format=LOG_FORMAT,
            datefmt="%H:%M:%S",
            stream=sys.stderr,
            force=True,
        )
        return args.handler(args, settings)
    except ValidationError as e:
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        print(_kv(status="error", exit_code=1, error=type(e).__name__))
        return 1
    except AggregateEngineError as e:
        print(f"error: {e}", file=sys.stderr)
        print(_kv(status="error", exit_code=e.exit_code, error=type(e).__name__))
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
