"""
config.py — Centralized configuration for fitting and evaluation.
Uses pydantic-settings for validation. All values can be overridden via
environment variables (or a .env file) and, on the CLI, via flags.
"""

from pydantic import Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class LmConfig(BaseSettings):
    """Levenberg-Marquardt hyperparameters for one network fit."""

    model_config = SettingsConfigDict(
        env_prefix="AGG_LM_", env_file=".env", extra="ignore", frozen=True,
    )

    # ── Architecture ─────────────────────────────────────────────
    hidden_count: int = Field(default=5, ge=1)

    # ── Damping ──────────────────────────────────────────────────
    mu0: float = Field(default=1e-3, gt=0.0)
    mu_inc: float = Field(default=10.0, gt=1.0)
    mu_dec: float = Field(default=0.1, gt=0.0, lt=1.0)
    mu_max: float = Field(default=1e10, gt=0.0)

    # ── Stopping ─────────────────────────────────────────────────
    max_epochs: int = Field(default=1000, ge=1)
    goal_mse: float = Field(default=1e-10, ge=0.0)    # normalized target space
    min_grad: float = Field(default=1e-10, ge=0.0)
    max_val_fail: int = Field(default=6, ge=1)

    # ── Initialization ───────────────────────────────────────────
    seed: int = 0

    @model_validator(mode="after")
    def _check_mu_range(self) -> "LmConfig":
        if self.mu_max <= self.mu0:
            raise ValueError(f"mu_max ({self.mu_max}) must exceed mu0 ({self.mu0})")
        return self

    @property
    def parameter_count(self) -> int:
        return 5 * self.hidden_count + 1


class PipelineSettings(BaseSettings):
    """Process-wide defaults for the CLI pipeline."""

    model_config = SettingsConfigDict(
        env_prefix="AGG_", env_file=".env", extra="ignore",
    )

    # ── Logging ──────────────────────────────────────────────────
    log_level: str = "INFO"

    # ── Splitting ────────────────────────────────────────────────
    train_ratio: float = Field(default=5 / 7, ge=0.0, le=1.0)
    validation_ratio: float = Field(default=1 / 7, ge=0.0, le=1.0)
    test_ratio: float = Field(default=1 / 7, ge=0.0, le=1.0)
    split_seed: int = 42

    # ── Training ─────────────────────────────────────────────────
    restarts: int = Field(default=1, ge=1)
    workers: int = Field(default=1, ge=1)   # restarts / LOOCV folds in parallel

    # ── Artifacts ────────────────────────────────────────────────
    # Timestamp-free mode: when set, written verbatim as provenance timestamp.
    fixed_timestamp: str | None = None

    @property
    def ratios(self) -> tuple[float, float, float]:
        return (self.train_ratio, self.validation_ratio, self.test_ratio)
