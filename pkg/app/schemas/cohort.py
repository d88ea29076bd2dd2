"""
Cohort statistics schemas.

Defines ingest options, the class distribution summary and the
per-user eligibility report used to decide which users can get a
user-level model.
"""

from pydantic import BaseModel, Field

from app.schemas.common import StrictModel


class IngestOptions(StrictModel):
    """Options for reading a cohort CSV."""

    mapping: str = Field(default="three-class", description="Built-in class mapping name")
    user_column: str = Field(default="user_id", description="User id column")
    label_column: str = Field(default="label", description="Raw 1..5 label column")
    report_id_column: str = Field(default="report_id", description="Optional report id column")
    context_column: str = Field(default="context", description="Optional context tag column")


class ClassDistribution(BaseModel):
    """Class fractions and counts, overall or for one context group."""

    group: str = Field(default="all", description="Context tag or 'all'")
    total: int = Field(..., ge=0, description="Reports in the group")
    counts: dict[str, int] = Field(..., description="Reports per class")
    fractions: dict[str, float] = Field(..., description="Class fractions (sum to 1)")
    raw_counts: dict[int, int] = Field(
        default_factory=dict, description="Reports per raw 1..5 label"
    )


class EligibilityReport(BaseModel):
    """Per-user class presence statistics."""

    per_user_class_counts: dict[str, dict[str, int]] = Field(
        ..., description="user_id -> class -> count"
    )
    users_by_class_presence: dict[int, int] = Field(
        ..., description="Number of users with exactly k classes present"
    )
    negative_class: str = Field(..., description="Class tracked by the negative-count curve")
    negative_count_curve: dict[int, int] = Field(
        ..., description="n -> number of users with at least n negative reports"
    )

    @property
    def total_users(self) -> int:
        return len(self.per_user_class_counts)
