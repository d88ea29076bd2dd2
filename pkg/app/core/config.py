"""
Core configuration module for the engine.

This module defines process-wide settings using Pydantic BaseSettings,
enabling configuration through environment variables with type validation.
Settings are loaded from .env files and ``MOODCOMM_*`` environment variables.
"""

from functools import lru_cache
from typing import Any

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

ENV_PREFIX = "MOODCOMM_"


class Settings(BaseSettings):
    """
    Engine settings loaded from environment variables.

    Experiment parameters live in run config files (see ``app.schemas.run``);
    these settings only cover process-level concerns such as logging,
    parallelism and where outputs go.
    """

    model_config = SettingsConfigDict(
        env_prefix=ENV_PREFIX,
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    # Application Settings
    APP_NAME: str = Field(default="community-mood-engine", description="Application name")
    APP_VERSION: str = Field(default="1.0.0", description="Application version")

    # Run Settings
    SEED: int = Field(default=20240601, ge=0, description="Default master seed")
    THREADS: int = Field(default=0, ge=0, description="Parallel workers (0 = all cores)")
    OUTPUT_DIR: str = Field(default="out", description="Default output directory")
    INCLUDE_TIMESTAMPS: bool = Field(
        default=False,
        description="Write wall-clock timestamps into reports (breaks byte-identical reruns)",
    )

    # Logging Settings
    LOG_LEVEL: str = Field(default="INFO", description="Logging level")
    LOG_FORMAT: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="Log message format",
    )
    LOG_FILE: str | None = Field(default=None, description="Log file path (None for stderr only)")
    LOG_JSON: bool = Field(default=False, description="Emit log records as JSON lines")

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def normalize_log_level(cls, v: Any) -> str:
        """Accept any casing for the log level."""
        level = str(v).strip().upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level: {v}")
        return level

    @property
    def n_jobs(self) -> int:
        """Worker count for joblib (-1 means all cores)."""
        return -1 if self.THREADS == 0 else self.THREADS


@lru_cache
def get_settings() -> Settings:
    """
    Get cached settings instance.

    Returns:
        Settings: Cached settings instance
    """
    return Settings()


class RunOverrides(BaseSettings):
    """
    Run-config overrides supplied through ``MOODCOMM_RUN_*`` variables.

    ``MOODCOMM_RUN_SEED=7`` overrides the ``seed`` key of a run config;
    the precedence is flags > env > file.
    """

    model_config = SettingsConfigDict(
        env_prefix=f"{ENV_PREFIX}RUN_",
        env_file=None,
        case_sensitive=False,
        extra="ignore",
    )

    seed: int | None = Field(default=None, ge=0, description="Master seed")
    threads: int | None = Field(default=None, ge=0, description="Parallel workers")
    out: str | None = Field(default=None, description="Output path or directory")
    cohort_path: str | None = Field(default=None, description="Cohort CSV")

    def present(self) -> dict[str, Any]:
        """Overrides actually set in the environment."""
        return self.model_dump(exclude_unset=True)


# Global settings instance
settings = get_settings()
