import math

import numpy as np
import pytest

from aggregate_engine.errors import DataError, NumericalError
from aggregate_engine.geotech import (
    AttritionKind, AttritionTestRecord, ValidityStatus, attrition_coefficient,
    check_validity, la_coefficient, mde_coefficient, mds_coefficient,
)


@pytest.mark.parametrize("fines, expected", [(0.0, 0.0), (500.0, 100.0), (140.0, 28.0)])
def test_la_coefficient(fines, expected) -> None:
    assert la_coefficient(AttritionTestRecord(500.0, fines, AttritionKind.LA)) == expected


@pytest.mark.parametrize("fines, expected", [(0.0, 0.0), (75.0, 15.0)])
def test_mde_coefficient(fines, expected) -> None:
    assert mde_coefficient(AttritionTestRecord(500.0, fines, AttritionKind.MDE)) == expected


def test_dry_micro_deval_and_dispatch() -> None:
    rec = AttritionTestRecord(500.0, 60.0, AttritionKind.MDS)
    assert mds_coefficient(rec) == 12.0
    assert attrition_coefficient(rec) == 12.0
    assert attrition_coefficient(AttritionTestRecord(500.0, 140.0, AttritionKind.LA)) == 28.0


@pytest.mark.parametrize("total, fines", [
    (500.0, 510.0),
    (0.0, 0.0),
    (-5.0, 1.0),
    (500.0, -1.0),
    (math.inf, 1.0),
    (500.0, math.nan),
])
def test_invalid_masses(total, fines) -> None:
    with pytest.raises(DataError):
        mde_coefficient(AttritionTestRecord(total, fines, AttritionKind.MDE))


def test_kind_mismatch() -> None:
    with pytest.raises(DataError, match="expected a LA record"):
        la_coefficient(AttritionTestRecord(500.0, 100.0, AttritionKind.MDE))


def test_random_mass_pairs_stay_in_range() -> None:
    rng = np.random.default_rng(2024)
    totals = rng.uniform(1.0, 5000.0, 10_000)
    fines = totals * rng.random(10_000)
    for M, m in zip(totals.tolist(), fines.tolist()):
        for kind, fn in ((AttritionKind.LA, la_coefficient), (AttritionKind.MDE, mde_coefficient)):
            value = fn(AttritionTestRecord(M, m, kind))
            assert 0.0 <= value <= 100.0
            assert abs(value - 100.0 * m / M) <= 1e-12


@pytest.mark.parametrize("value, status", [
    (18.0, ValidityStatus.VALID),
    (-2.0, ValidityStatus.NEGATIVE_INVALID),
    (104.3, ValidityStatus.ABOVE_HUNDRED_INVALID),
    (0.0, ValidityStatus.VALID),
    (100.0, ValidityStatus.VALID),
])
def test_check_validity(value, status) -> None:
    flag = check_validity(value)
    assert flag.status is status
    assert flag.value == value
    assert flag.is_valid == (status is ValidityStatus.VALID)


def test_non_finite_prediction() -> None:
    with pytest.raises(NumericalError):
        check_validity(float("nan"))
