"""
Synthetic cohort generator schema.

Knobs for a seeded cohort with latent user clusters, class skew and
context tags.
"""

from pydantic import Field, field_validator, model_validator

from app.schemas.common import StrictModel


class GeneratorConfig(StrictModel):
    """Configuration of the synthetic cohort generator."""

    n_clusters: int = Field(default=4, ge=1)
    n_users: int = Field(default=60, ge=1)
    reports_per_user_mean: float = Field(default=40.0, gt=0.0)
    reports_per_user_spread: float = Field(default=10.0, ge=0.0)
    min_reports_per_user: int = Field(default=5, ge=1)
    n_features: int = Field(default=20, ge=1)
    class_priors: list[float] = Field(
        default=[0.10, 0.38, 0.52],
        description="Global (negative, neutral, positive) priors",
    )
    cluster_tilt: float = Field(
        default=0.5, ge=0.0, le=1.0, description="How far cluster priors move from the global one"
    )
    cluster_separation: float = Field(
        default=2.0, ge=0.0, description="Centroid spread in within-cluster std units"
    )
    label_signal: float = Field(
        default=0.7, ge=0.0, le=1.0, description="Strength of class-conditional feature offsets"
    )
    user_signal: float = Field(
        default=1.0,
        ge=0.0,
        description="Weight of user-specific class offsets relative to the cluster's",
    )
    user_spread: float = Field(
        default=0.5, ge=0.0, description="Per-user centre jitter in within-cluster std units"
    )
    missing_rate: float = Field(
        default=0.0, ge=0.0, lt=1.0, description="Fraction of feature cells left empty"
    )
    context_tags: dict[str, float] = Field(
        default={"eating": 0.3, "working": 0.3, "resting": 0.4},
        description="Context tag proportions",
    )
    shifted_context: str = Field(default="eating", description="Context receiving the shift")
    context_shift: float = Field(default=0.5, description="Feature shift of the shifted context")
    hard_context: str | None = Field(
        default=None, description="Context whose labels get extra noise"
    )
    hard_context_noise: float = Field(
        default=0.5, ge=0.0, le=1.0, description="Label resampling rate in the hard context"
    )
    noise_std: float = Field(default=1.0, gt=0.0, description="Within-cluster feature std")
    seed: int = Field(default=0, ge=0)

    @field_validator("class_priors")
    @classmethod
    def validate_priors(cls, v: list[float]) -> list[float]:
        """Priors are three non-negative weights summing to 1."""
        if len(v) != 3 or any(p < 0 for p in v):
            raise ValueError("class_priors needs three non-negative values")
        if abs(sum(v) - 1.0) > 1e-9:
            raise ValueError("class_priors must sum to 1")
        return v

    @field_validator("context_tags")
    @classmethod
    def validate_contexts(cls, v: dict[str, float]) -> dict[str, float]:
        """Context proportions are non-negative and sum to 1."""
        if not v or any(p < 0 for p in v.values()):
            raise ValueError("context_tags needs non-negative proportions")
        if abs(sum(v.values()) - 1.0) > 1e-9:
            raise ValueError("context_tags proportions must sum to 1")
        return v

    @model_validator(mode="after")
    def validate_named_contexts(self) -> "GeneratorConfig":
        """Shifted and hard contexts must be among the tags."""
        if self.shifted_context not in self.context_tags:
            raise ValueError(f"shifted_context {self.shifted_context!r} is not a context tag")
        if self.hard_context is not None and self.hard_context not in self.context_tags:
            raise ValueError(f"hard_context {self.hard_context!r} is not a context tag")
        return self
