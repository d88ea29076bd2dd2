"""Pydantic schemas package for configuration and report validation."""

from app.schemas.cohort import ClassDistribution, EligibilityReport, IngestOptions
from app.schemas.common import ErrorResponse, Provenance
from app.schemas.community import (
    FixedPolicy,
    MaxAvgPolicy,
    PerUserMaxPolicy,
    SelectionMode,
    SweepResult,
    ThresholdGrid,
    ThresholdPolicy,
)
from app.schemas.forest import ForestParams, GridSearchResult, HyperGrid
from app.schemas.metrics import MetricsBundle
from app.schemas.protocol import (
    ClassifierConfig,
    ClassifierKind,
    ContextBreakdown,
    ExperimentReport,
    InjectionConfig,
    InjectionSweepReport,
    ProtocolConfig,
    UserResult,
    UserStatus,
)
from app.schemas.run import RunConfig
from app.schemas.sampling import Protocol, SmoteConfig, SplitSpec
from app.schemas.synth import GeneratorConfig

__all__ = [
    # Cohort schemas
    "ClassDistribution",
    "EligibilityReport",
    "IngestOptions",
    # Common schemas
    "ErrorResponse",
    "Provenance",
    # Community schemas
    "FixedPolicy",
    "MaxAvgPolicy",
    "PerUserMaxPolicy",
    "SelectionMode",
    "SweepResult",
    "ThresholdGrid",
    "ThresholdPolicy",
    # Classifier schemas
    "ForestParams",
    "GridSearchResult",
    "HyperGrid",
    "MetricsBundle",
    # Protocol schemas
    "ClassifierConfig",
    "ClassifierKind",
    "ContextBreakdown",
    "ExperimentReport",
    "InjectionConfig",
    "InjectionSweepReport",
    "ProtocolConfig",
    "UserResult",
    "UserStatus",
    # Run / sampling / generator
    "RunConfig",
    "Protocol",
    "SmoteConfig",
    "SplitSpec",
    "GeneratorConfig",
]
