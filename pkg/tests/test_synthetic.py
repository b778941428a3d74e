import numpy as np
import pytest

from aggregate_engine.dataset import Target, fit_scaler, load_csv, load_csv_path
from aggregate_engine.synthetic import (
    carbonate_dataset, linear_dataset, main, negative_mde_dataset, write_csv,
)


def test_linear_dataset_targets_are_affine_in_normalized_features() -> None:
    data = linear_dataset(12, seed=3, intercept=40.0, slopes=(-5.0, 2.0, 1.5))
    z = fit_scaler(data).apply(data.features())
    expected = 40.0 + z @ np.array([-5.0, 2.0, 1.5])
    np.testing.assert_allclose(data.targets(Target.LA), expected, atol=1e-12)
    np.testing.assert_array_equal(data.targets(Target.LA), data.targets(Target.MDE))


def test_linear_dataset_is_seeded() -> None:
    assert linear_dataset(8, seed=1).fingerprint() == linear_dataset(8, seed=1).fingerprint()
    assert linear_dataset(8, seed=1).fingerprint() != linear_dataset(8, seed=2).fingerprint()
    with pytest.raises(ValueError):
        linear_dataset(3)


def test_carbonate_trend() -> None:
    data = carbonate_dataset(7, noise=0.0)
    v = data.features()[:, 0]
    assert np.all(np.diff(v) > 0)
    assert np.all(np.diff(data.targets(Target.LA)) < 0)
    assert np.all(np.diff(data.targets(Target.MDE)) < 0)
    noisy = carbonate_dataset(7, seed=42, noise=1.0)
    assert np.corrcoef(v, noisy.targets(Target.LA))[0, 1] < -0.8


def test_negative_mde_construction() -> None:
    train, held = negative_mde_dataset()
    assert len(train) == 6 and len(held) == 1
    for s in train.samples:
        assert s.mde == pytest.approx(65.0 - 0.012 * s.velocity, abs=1e-9)
        assert s.la is None
    assert held.samples[0].velocity > max(s.velocity for s in train.samples)


def test_write_csv_round_trip(tmp_path) -> None:
    data = carbonate_dataset(5, seed=9)
    path = tmp_path / "c.csv"
    raw = write_csv(data, path)
    assert load_csv(raw).fingerprint() == data.fingerprint()
    assert load_csv_path(path).ids == data.ids


def test_bundled_csv(bundled_csv) -> None:
    data = load_csv_path(bundled_csv)
    assert len(data) == 7
    assert len(data.with_target(Target.LA)) == len(data.with_target(Target.MDE)) == 7


def test_bundled_csv_follows_seeded_generator(bundled_csv) -> None:
    bundled = load_csv_path(bundled_csv)
    generated = carbonate_dataset(7, seed=42)
    assert bundled.ids == generated.ids
    np.testing.assert_array_equal(bundled.features()[:, 0], generated.features()[:, 0])
    # within five noise standard deviations of the seed-42 draw, column by column
    np.testing.assert_allclose(bundled.features()[:, 1], generated.features()[:, 1], atol=0.05)
    np.testing.assert_allclose(bundled.features()[:, 2], generated.features()[:, 2], atol=1.5)
    for target in Target:
        np.testing.assert_allclose(bundled.targets(target), generated.targets(target), atol=5.0)
        assert np.corrcoef(bundled.features()[:, 0], bundled.targets(target))[0, 1] < -0.9


def test_writer_entry_point(tmp_path) -> None:
    out = tmp_path / "c.csv"
    assert main([str(out), "--n", "9", "--seed", "5", "--noise", "0.5"]) == 0
    assert out.read_bytes() == write_csv(carbonate_dataset(9, seed=5, noise=0.5))
