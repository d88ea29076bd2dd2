"""Metric bundle schema."""

from pydantic import BaseModel, Field


class MetricsBundle(BaseModel):
    """Accuracy, macro F1 and one-vs-rest macro AUC for one evaluation."""

    accuracy: float = Field(..., ge=0.0, le=1.0)
    macro_f1: float = Field(..., ge=0.0, le=1.0)
    auc_ovr_macro: float | None = Field(
        None, ge=0.0, le=1.0, description="None when no class is AUC-eligible"
    )
    support: dict[str, int] = Field(..., description="Test rows per class")
