"""
geotech.py — Attrition test coefficients and physical-validity screening.

Los Angeles (fragmentation) and Micro-Deval (abrasion, wet or dry) all report
the mass share of fines below 1.6 mm produced by the test:
    coefficient = 100 · m / M
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

from .errors import DataError, NumericalError

logger = logging.getLogger(__name__)


class AttritionKind(Enum):
    LA = "la"      # Los Angeles fragmentation
    MDE = "mde"    # Micro-Deval, in the presence of water
    MDS = "mds"    # Micro-Deval, dry


@dataclass(frozen=True)
class AttritionTestRecord:
    total_mass: float      # M, grams
    fines_mass: float      # m, grams of particles < 1.6 mm
    kind: AttritionKind


def _checked_ratio(record: AttritionTestRecord, expected: AttritionKind) -> float:
    if record.kind is not expected:
        raise DataError(f"expected a {expected.name} record, got {record.kind.name}")
    M, m = record.total_mass, record.fines_mass
    if not (math.isfinite(M) and math.isfinite(m)):
        raise DataError("masses must be finite")
    if M <= 0:
        raise DataError(f"total mass must be > 0, got {M}")
    if m < 0:
        raise DataError(f"fines mass must be >= 0, got {m}")
    if m > M:
        raise DataError(f"fines mass {m} exceeds total mass {M}")
    return 100.0 * m / M


def la_coefficient(record: AttritionTestRecord) -> float:
    return _checked_ratio(record, AttritionKind.LA)


def mde_coefficient(record: AttritionTestRecord) -> float:
    return _checked_ratio(record, AttritionKind.MDE)


def mds_coefficient(record: AttritionTestRecord) -> float:
    return _checked_ratio(record, AttritionKind.MDS)


def attrition_coefficient(record: AttritionTestRecord) -> float:
    """Coefficient for whichever test the record comes from."""
    return _checked_ratio(record, record.kind)


# ─────────────────────────────────────────────────────────────────────
# Validity screening
# ─────────────────────────────────────────────────────────────────────

class ValidityStatus(Enum):
    VALID = "valid"
    NEGATIVE_INVALID = "negative_invalid"
    ABOVE_HUNDRED_INVALID = "above_hundred_invalid"


@dataclass(frozen=True)
class ValidityFlag:
    value: float
    status: ValidityStatus

    @property
    def is_valid(self) -> bool:
        return self.status is ValidityStatus.VALID


def check_validity(value: float) -> ValidityFlag:
    """
    Classify a predicted coefficient. Predictions are reported, never clamped:
    a value outside [0, 100] is a sign of model inadequacy.
    """
    if not math.isfinite(value):
        raise NumericalError(f"predicted coefficient is not finite: {value}")
    if value < 0.0:
        status = ValidityStatus.NEGATIVE_INVALID
    elif value > 100.0:
        status = ValidityStatus.ABOVE_HUNDRED_INVALID
    else:
        status = ValidityStatus.VALID
    if status is not ValidityStatus.VALID:
        logger.debug(f"[GEOTECH] {value:.4f} flagged {status.name}")
    return ValidityFlag(float(value), status)
