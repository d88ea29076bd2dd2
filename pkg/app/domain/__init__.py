"""In-memory domain containers (cohorts, profiles, communities, splits)."""

from app.domain.cohort import (
    FIVE_CLASS,
    THREE_CLASS,
    ClassMapping,
    Cohort,
    FeatureSchema,
    MoodClass,
    Report,
)
from app.domain.community import Community, Split
from app.domain.profile import ScalingMode, ScalingParams, SimilarityMatrix, UserProfileMatrix

__all__ = [
    "FIVE_CLASS",
    "THREE_CLASS",
    "ClassMapping",
    "Cohort",
    "Community",
    "FeatureSchema",
    "MoodClass",
    "Report",
    "ScalingMode",
    "ScalingParams",
    "SimilarityMatrix",
    "Split",
    "UserProfileMatrix",
]
