"""
Common schemas used across the engine.

Defines the machine-readable error document and the provenance block
embedded in every output file.
"""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field


class StrictModel(BaseModel):
    """Base for every config schema: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")


class ErrorResponse(BaseModel):
    """Schema for the JSON error document written by the CLI on failure."""

    error: str = Field(..., description="Error message")
    code: str = Field(..., description="Stable error code")
    details: dict[str, Any] = Field(default_factory=dict, description="Additional error details")
    exit_code: int = Field(..., description="Process exit code")
    timestamp: str | None = Field(None, description="ISO timestamp when the error occurred")


class Provenance(BaseModel):
    """Reproducibility block: rerunning from the echoed config reproduces the file."""

    engine_version: str = Field(..., description="Engine version that produced the file")
    master_seed: int = Field(..., description="Master seed of the run")
    config_hash: str = Field(..., description="SHA-256 of the canonical config echo")
    created_at: str | None = Field(
        None, description="Wall-clock timestamp (only when timestamps are enabled)"
    )
