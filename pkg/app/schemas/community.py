"""
Community schemas.

Threshold grids, the three threshold policies and the sweep tables that
describe how community sizes shrink as the threshold grows.
"""

from enum import StrEnum
from typing import Annotated, Literal

from pydantic import BaseModel, Field, field_validator

from app.schemas.common import StrictModel

DEFAULT_THRESHOLDS: tuple[float, ...] = (
    0.0,
    0.1,
    0.2,
    0.3,
    0.4,
    0.5,
    0.6,
    0.7,
    0.8,
    0.85,
    0.9,
    0.95,
    0.96,
    0.97,
    0.98,
    0.99,
)


class ThresholdGrid(StrictModel):
    """Strictly increasing similarity thresholds in [0, 1]."""

    values: list[float] = Field(default=list(DEFAULT_THRESHOLDS), min_length=1)

    @field_validator("values")
    @classmethod
    def validate_values(cls, v: list[float]) -> list[float]:
        """Ensure the grid is in range and strictly increasing."""
        for value in v:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"Threshold {value} outside [0, 1]")
        if any(b <= a for a, b in zip(v, v[1:], strict=False)):
            raise ValueError("Thresholds must be unique and strictly increasing")
        return v

    @classmethod
    def parse(cls, text: str) -> "ThresholdGrid":
        """Build a grid from a comma-separated string such as ``0.8,0.9,0.95``."""
        return cls(values=[float(part) for part in text.split(",") if part.strip()])


class SelectionMode(StrEnum):
    """How PerUserMax scores each threshold."""

    TEST = "test"  # select on the target's test rows (optimistic)
    VALIDATION = "validation"  # select on a slice of the target's training rows


class FixedPolicy(StrictModel):
    kind: Literal["fixed"] = "fixed"
    threshold: float = Field(..., ge=0.0, le=1.0)


class PerUserMaxPolicy(StrictModel):
    kind: Literal["per_user_max"] = "per_user_max"
    grid: ThresholdGrid = Field(default_factory=ThresholdGrid)
    selection: SelectionMode = Field(default=SelectionMode.TEST)
    validation_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)


class MaxAvgPolicy(StrictModel):
    """Cold-start threshold: the mean of other users' best thresholds."""

    kind: Literal["max_avg"] = "max_avg"
    value: float | None = Field(
        default=None,
        ge=0.0,
        le=1.0,
        description="Precomputed threshold; when None it is derived leave-one-out per user",
    )
    grid: ThresholdGrid = Field(default_factory=ThresholdGrid)


ThresholdPolicy = Annotated[
    FixedPolicy | PerUserMaxPolicy | MaxAvgPolicy, Field(discriminator="kind")
]


class SweepSummaryRow(BaseModel):
    """Per-threshold community statistics."""

    threshold: float
    mean_size: float
    std_size: float
    modelable_users: int = Field(..., description="Users with a non-empty community")


class SweepResult(BaseModel):
    """Users x thresholds community-size table plus per-threshold summary."""

    thresholds: list[float]
    user_ids: list[str]
    sizes: list[list[int]] = Field(..., description="sizes[user][threshold]")
    summary: list[SweepSummaryRow]
