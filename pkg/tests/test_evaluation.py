import math

import numpy as np
import pytest

from aggregate_engine.dataset import Target
from aggregate_engine.errors import DataError
from aggregate_engine.evaluation import (
    ModelKind, build_report, compare_reports, evaluate, evaluate_model, render_table,
    screen_predictions, summary_line,
)
from aggregate_engine.geotech import ValidityStatus
from aggregate_engine.linreg import fit_ols
from aggregate_engine.synthetic import linear_dataset, negative_mde_dataset


def test_perfect_predictions() -> None:
    m = evaluate([10.0, 20.0, 35.0], [10.0, 20.0, 35.0])
    assert m.r2_cod == 1.0
    assert m.r2_pearson == pytest.approx(1.0)
    assert m.rmse == 0.0
    assert m.mean_abs_line1_deviation == 0.0


def test_mean_predictor_has_zero_determination() -> None:
    m = evaluate([1.0, 2.0, 3.0], [2.0, 2.0, 2.0])
    assert m.r2_cod == 0.0
    assert m.r2_pearson is None


def test_hand_evaluated_metrics() -> None:
    m = evaluate([1.0, 2.0, 3.0], [1.0, 2.0, 2.0])
    assert m.r2_cod == pytest.approx(0.5)
    assert m.rmse == pytest.approx(math.sqrt(1 / 3))
    assert m.mean_abs_line1_deviation == pytest.approx(1 / 3)


def test_pearson_ignores_direction_but_determination_does_not() -> None:
    m = evaluate([1.0, 2.0, 3.0], [3.0, 2.0, 1.0])
    assert m.r2_cod == pytest.approx(-3.0)
    assert m.r2_pearson == pytest.approx(1.0)


def test_pearson_invariant_under_positive_affine_predictions() -> None:
    rng = np.random.default_rng(41)
    for _ in range(100):
        n = int(rng.integers(3, 30))
        measured = rng.uniform(5.0, 60.0, n)
        predicted = measured + rng.normal(0.0, 5.0, n)
        scale = float(rng.choice([rng.uniform(0.2, 0.8), rng.uniform(1.25, 5.0)]))
        shifted = scale * predicted + rng.uniform(-20.0, 20.0)
        base, moved = evaluate(measured, predicted), evaluate(measured, shifted)
        assert moved.r2_pearson == pytest.approx(base.r2_pearson, abs=1e-12)
        assert moved.r2_cod != pytest.approx(base.r2_cod, abs=1e-6)


def test_metrics_ignore_pair_order() -> None:
    rng = np.random.default_rng(42)
    for _ in range(100):
        n = int(rng.integers(2, 30))
        measured = rng.uniform(0.0, 100.0, n)
        predicted = rng.uniform(-10.0, 110.0, n)
        order = rng.permutation(n)
        a = evaluate(measured, predicted).as_dict()
        b = evaluate(measured[order], predicted[order]).as_dict()
        for key, value in a.items():
            if value is None:
                assert b[key] is None
            else:
                assert b[key] == pytest.approx(value, rel=1e-12, abs=1e-12)


def test_rmse_matches_direct_sum() -> None:
    rng = np.random.default_rng(43)
    for _ in range(100):
        n = int(rng.integers(1, 50))
        measured = rng.uniform(0.0, 100.0, n)
        predicted = rng.uniform(-10.0, 110.0, n)
        direct = math.fsum((p - m) ** 2 for m, p in zip(measured, predicted)) / n
        assert evaluate(measured, predicted).rmse ** 2 == pytest.approx(direct, rel=1e-12)


def test_constant_measured_values() -> None:
    m = evaluate([5.0, 5.0], [4.0, 6.0])
    assert m.r2_cod is None and m.r2_pearson is None
    assert m.rmse == 1.0


def test_evaluate_rejects_bad_input() -> None:
    with pytest.raises(DataError):
        evaluate([1.0, 2.0], [1.0])
    with pytest.raises(DataError):
        evaluate([], [])


def test_screening_counts() -> None:
    pairs, counts = screen_predictions([
        ("A", 20.0, 18.0, False),
        ("B", 3.0, -2.0, True),
        ("C", 99.0, 100.0, False),
    ])
    assert counts[ValidityStatus.NEGATIVE_INVALID] == 1
    assert counts[ValidityStatus.ABOVE_HUNDRED_INVALID] == 0
    assert counts[ValidityStatus.VALID] == 2
    flagged = [p.sample_id for p in pairs if not p.validity.is_valid]
    assert flagged == ["B"]


def test_negative_prediction_surfaces_in_summary() -> None:
    train, held = negative_mde_dataset()
    report = evaluate_model(fit_ols(train, Target.MDE), held)
    line = summary_line(report)
    assert "invalid_negative=1" in line
    assert "extrapolated=1" in line
    assert report.pairs[0].validity.status is ValidityStatus.NEGATIVE_INVALID


def test_evaluate_model_on_training_data() -> None:
    data = linear_dataset(10)
    report = evaluate_model(fit_ols(data, Target.LA), data)
    assert report.r2_cod == pytest.approx(1.0, abs=1e-9)
    assert "r2_cod=1.000" in summary_line(report, {"split": "train"})
    assert summary_line(report, {"split": "train"}).startswith("split=train target=la model=ols")


def test_evaluate_model_requires_target() -> None:
    train, _ = negative_mde_dataset()
    model = fit_ols(train, Target.MDE)
    with pytest.raises(DataError, match="MDE"):
        evaluate_model(model, linear_dataset(6).subset([]))


def test_compare_prefers_lower_rmse_and_ols_on_ties() -> None:
    a = build_report(Target.LA, ModelKind.OLS, [("A", 10.0, 11.0, False), ("B", 20.0, 19.0, False)])
    b = build_report(Target.LA, ModelKind.ANN, [("A", 10.0, 10.5, False), ("B", 20.0, 19.5, False)])
    assert compare_reports(a, b) is ModelKind.ANN
    assert compare_reports(a, a) is ModelKind.OLS


def test_frame_and_table() -> None:
    report = build_report(Target.MDE, ModelKind.ANN,
                          [("A", 10.0, 11.0, False), ("B", 20.0, 104.0, True)])
    frame = report.to_frame()
    assert list(frame.columns) == ["id", "measured_pct", "predicted_pct", "validity", "extrapolated"]
    assert frame["validity"].tolist() == ["valid", "above_hundred_invalid"]
    assert frame["extrapolated"].tolist() == ["false", "true"]
    table = render_table(report)
    assert "R² (determination)" in table and "R² (Pearson²)" in table
    assert "ABOVE_HUNDRED_INVALID" in table
