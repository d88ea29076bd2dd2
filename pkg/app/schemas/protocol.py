"""
Protocol schemas.

Defines the configuration of one evaluation run (PLM, HM, ULM or CBM),
the per-user results and the experiment report that aggregates them,
plus the context analyses built on top of those runs.
"""

from enum import StrEnum
from typing import Any, Literal

from pydantic import BaseModel, Field, model_validator

from app.schemas.common import Provenance, StrictModel
from app.schemas.community import ThresholdPolicy
from app.schemas.forest import ForestParams, HyperGrid
from app.schemas.metrics import MetricsBundle
from app.schemas.sampling import Protocol, SmoteConfig, SplitSpec


class ClassifierKind(StrEnum):
    FOREST = "forest"
    GRID = "grid"  # grid-searched forest
    MAJORITY = "majority"


class ClassifierConfig(StrictModel):
    """Which classifier each (user, repeat) task trains."""

    kind: ClassifierKind = Field(default=ClassifierKind.FOREST)
    forest: ForestParams = Field(default_factory=ForestParams)
    grid: HyperGrid = Field(default_factory=HyperGrid)


class ProtocolConfig(StrictModel):
    """Configuration of one protocol run."""

    protocol: Protocol
    split: SplitSpec = Field(default_factory=SplitSpec)
    smote: SmoteConfig = Field(default_factory=SmoteConfig)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)
    threshold_policy: ThresholdPolicy | None = Field(default=None)
    ulm_min_per_class: int = Field(default=2, ge=1)
    keep_predictions: bool = Field(
        default=False, description="Store pooled test predictions (needed by context_breakdown)"
    )
    seed: int = Field(default=0, ge=0, description="Master seed")

    @model_validator(mode="after")
    def validate_policy(self) -> "ProtocolConfig":
        """CBM requires a threshold policy; the other protocols forbid one."""
        if self.protocol == Protocol.CBM and self.threshold_policy is None:
            raise ValueError("CBM requires a threshold_policy")
        if self.protocol != Protocol.CBM and self.threshold_policy is not None:
            raise ValueError(f"{self.protocol} does not take a threshold_policy")
        if self.split.seed != self.seed:
            self.split = self.split.model_copy(update={"seed": self.seed})
        return self


class UserStatus(StrEnum):
    OK = "ok"
    SKIPPED = "skipped"


class MetricSummary(BaseModel):
    """Mean and population std of one metric."""

    mean: float | None
    std: float | None


class UserResult(BaseModel):
    """Per-user outcome of one protocol run."""

    user_id: str
    status: UserStatus
    reason: str | None = None
    repeats: list[MetricsBundle] = Field(default_factory=list)
    summary: dict[str, MetricSummary] = Field(
        default_factory=dict, description="metric -> mean/std across repeats"
    )
    threshold: float | None = Field(None, description="Chosen threshold (CBM)")
    community_size: int | None = Field(None, description="Community size at that threshold")
    threshold_accuracy: dict[str, float] = Field(
        default_factory=dict, description="PerUserMax: threshold -> mean accuracy"
    )


class AggregateMetric(BaseModel):
    """Cohort aggregate: mean of per-user means, with both std conventions."""

    mean: float | None
    std_across_users: float | None
    std_across_repeats: float | None


class ThresholdSummaryRow(BaseModel):
    """One column of the per-threshold CBM chart."""

    label: str
    threshold: float | None
    mean_accuracy: float | None
    std_accuracy: float | None
    mean_community_size: float | None
    modelable_users: int


class PredictionRecord(BaseModel):
    """One pooled test prediction."""

    report_id: str
    user_id: str
    repeat: int
    context: str | None
    truth: str
    pred: str


class ExperimentReport(BaseModel):
    """Per-user and aggregate metrics for one protocol run."""

    kind: Literal["experiment"] = "experiment"
    protocol: Protocol
    config: dict[str, Any]
    schema_sidecar: dict[str, Any]
    n_users_total: int
    n_users_ok: int
    n_users_skipped: int
    aggregate: dict[str, AggregateMetric]
    users: list[UserResult]
    metric_schemes: dict[str, str]
    eligibility: dict[str, Any] | None = None
    threshold_summary: list[ThresholdSummaryRow] = Field(default_factory=list)
    selection_optimistic: bool = False
    feature_importance_top: list[tuple[str, float]] = Field(default_factory=list)
    confusion: dict[str, dict[str, int]] = Field(default_factory=dict)
    predictions: list[PredictionRecord] = Field(default_factory=list)
    provenance: Provenance


class ContextGroupRow(BaseModel):
    """Accuracy and support of one context group."""

    group: str
    support: int
    accuracy: float | None


class ContextBreakdown(BaseModel):
    """Per-context accuracy over pooled test predictions."""

    kind: Literal["context_breakdown"] = "context_breakdown"
    protocol: Protocol | None = None
    rows: list[ContextGroupRow] = Field(..., description="overall row first, then contexts")
    provenance: Provenance | None = Field(None, description="Provenance of the source report")


class InjectionConfig(StrictModel):
    """Context-injection sweep settings."""

    target_context: str = Field(default="eating")
    counts: list[int] = Field(default=[0, 50, 100, 200, 400], min_length=1)
    test_fraction: float = Field(default=0.3, gt=0.0, lt=1.0)
    repeats: int = Field(default=5, ge=1)
    smote: SmoteConfig = Field(default_factory=SmoteConfig)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)
    seed: int = Field(default=0, ge=0)


class InjectionRow(BaseModel):
    """Sweep outcome for one injected count."""

    count: int
    overall_accuracy: float
    overall_accuracy_std: float
    context_accuracy: float
    context_accuracy_std: float


class InjectionSweepReport(BaseModel):
    """Overall and target-context accuracy per injected count."""

    kind: Literal["injection_sweep"] = "injection_sweep"
    target_context: str
    config: dict[str, Any]
    rows: list[InjectionRow]
    provenance: Provenance
