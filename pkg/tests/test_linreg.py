from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from aggregate_engine.dataset import Dataset, FeatureScaler, Target, fit_scaler
from aggregate_engine.errors import DataError
from aggregate_engine.geotech import ValidityStatus, check_validity
from aggregate_engine.linreg import LinearModel, fit_ols, predict_linear, training_sse
from aggregate_engine.synthetic import linear_dataset, negative_mde_dataset

from conftest import make_dataset, random_features


def test_noiseless_linear_recovery() -> None:
    data = linear_dataset(10)
    model = fit_ols(data, Target.LA)
    assert model.intercept == pytest.approx(5.0, abs=1e-8)
    np.testing.assert_allclose(model.coefficients, (2.0, 3.0, -1.0), atol=1e-8)
    assert training_sse(model, data) < 1e-12


def test_training_samples_predicted_exactly() -> None:
    data = linear_dataset(10, seed=5)
    model = fit_ols(data, Target.MDE)
    for s in data.samples:
        assert predict_linear(model, s.features).value == pytest.approx(s.mde, abs=1e-8)


def test_constant_target() -> None:
    data = linear_dataset(10, intercept=12.5, slopes=(0.0, 0.0, 0.0))
    model = fit_ols(data, Target.LA)
    assert model.intercept == pytest.approx(12.5, abs=1e-10)
    np.testing.assert_allclose(model.coefficients, 0.0, atol=1e-10)


def _normal_equations(Z: np.ndarray, y: np.ndarray) -> np.ndarray:
    X = np.column_stack([np.ones(len(Z)), Z])
    return np.linalg.solve(X.T @ X, X.T @ y)


def test_matches_normal_equations_oracle() -> None:
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(200):
        n = int(rng.integers(4, 51))
        x = random_features(rng, n)
        y = rng.uniform(5.0, 60.0, n)
        data = make_dataset(x, la=y)
        Z = fit_scaler(data).apply(x)
        if np.linalg.cond(np.column_stack([np.ones(n), Z])) > 1e3:
            continue
        oracle = _normal_equations(Z, y)
        model = fit_ols(data, Target.LA)
        np.testing.assert_allclose(model.params, oracle, rtol=1e-8,
                                   atol=1e-8 * np.abs(oracle).max())
        checked += 1
    assert checked > 100


def test_too_few_samples() -> None:
    data = make_dataset([[4000, 2.5, 3], [4500, 2.6, 2], [5000, 2.7, 1]], la=[30, 25, 20])
    with pytest.raises(DataError, match="need ≥ 4 samples"):
        fit_ols(data, Target.LA)


def test_samples_without_target_are_ignored() -> None:
    data = make_dataset([[4000, 2.5, 3], [4500, 2.6, 2], [5000, 2.7, 1], [5500, 2.65, 4]],
                        la=[30, 25, 20, None])
    with pytest.raises(DataError, match="got 3"):
        fit_ols(data, Target.LA)


def test_collinear_features_are_rank_deficient() -> None:
    # density is an exact affine copy of velocity after normalization
    x = [[4000, 2.0, 5.0], [4500, 2.5, 2.0], [5000, 3.0, 4.0], [5500, 3.5, 1.0], [6000, 4.0, 3.0]]
    with pytest.raises(DataError, match="rank deficient"):
        fit_ols(make_dataset(x, la=[30, 28, 22, 20, 15]), Target.LA)


def test_constant_model_predicts_intercept() -> None:
    scaler = FeatureScaler((4000.0, 2.5, 1.0), (5000.0, 2.7, 5.0))
    model = LinearModel(Target.LA, 20.0, (0.0, 0.0, 0.0), scaler)
    assert predict_linear(model, (4400.0, 2.6, 2.0)).value == 20.0
    assert predict_linear(model, (4400.0, 2.6, 2.0)).extrapolated is False
    assert predict_linear(model, (6400.0, 2.6, 2.0)).extrapolated is True


def test_raw_units_reproduce_predictions() -> None:
    rng = np.random.default_rng(4)
    data = make_dataset(random_features(rng, 12), la=rng.uniform(10, 40, 12))
    model = fit_ols(data, Target.LA)
    b0, slopes = model.raw_units()
    x = random_features(rng, 50)
    raw = b0 + x @ np.asarray(slopes)
    np.testing.assert_allclose(raw, model.predict_normalized(model.scaler.apply(x)), rtol=1e-9)


def test_held_out_negative_mde_is_flagged() -> None:
    train, held = negative_mde_dataset()
    model = fit_ols(train, Target.MDE)
    pred = predict_linear(model, held.samples[0].features)
    assert pred.value == pytest.approx(-7.0, abs=1e-6)
    assert pred.extrapolated
    assert check_validity(pred.value).status is ValidityStatus.NEGATIVE_INVALID


def _well_posed(rng: np.random.Generator, n_min: int = 6):
    """Random instance whose design matrix is comfortably full rank."""
    while True:
        n = int(rng.integers(n_min, 40))
        x = random_features(rng, n)
        z = fit_scaler(x).apply(x)
        if np.linalg.cond(np.column_stack([np.ones(n), z])) < 1e2:
            return x, rng.uniform(10.0, 50.0, n)


def test_fitted_parameters_minimize_sse() -> None:
    rng = np.random.default_rng(21)
    for _ in range(50):
        x, y = _well_posed(rng)
        data = make_dataset(x, la=y)
        model = fit_ols(data, Target.LA)
        best = training_sse(model, data)
        for k in range(4):
            for step in (-1e-3, 1e-3):
                params = model.params
                params[k] += step
                nudged = replace(model, intercept=float(params[0]),
                                 coefficients=tuple(float(c) for c in params[1:]))
                assert training_sse(nudged, data) >= best


def test_fit_ignores_sample_order() -> None:
    rng = np.random.default_rng(22)
    for _ in range(50):
        x, y = _well_posed(rng)
        data = make_dataset(x, la=y)
        shuffled = Dataset(tuple(data.samples[i] for i in rng.permutation(len(data))))
        np.testing.assert_allclose(fit_ols(shuffled, Target.LA).params,
                                   fit_ols(data, Target.LA).params, rtol=0, atol=1e-8)


def test_target_offset_moves_only_intercept() -> None:
    rng = np.random.default_rng(23)
    for _ in range(50):
        x, y = _well_posed(rng)
        c = float(rng.uniform(-9.0, 45.0))
        base = fit_ols(make_dataset(x, la=y), Target.LA)
        shifted = fit_ols(make_dataset(x, la=y + c), Target.LA)
        assert shifted.intercept == pytest.approx(base.intercept + c, abs=1e-8)
        np.testing.assert_allclose(shifted.coefficients, base.coefficients, rtol=0, atol=1e-8)
