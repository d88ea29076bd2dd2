"""
Sampling schemas.

Split fractions, repeat counts and SMOTE settings shared by all protocols.
"""

from enum import StrEnum

from pydantic import Field

from app.schemas.common import StrictModel


class Protocol(StrEnum):
    """Evaluation protocols."""

    PLM = "PLM"  # population-level, leave-one-user-out
    HM = "HM"  # hybrid: target 70% + population
    ULM = "ULM"  # user-level only
    CBM = "CBM"  # hybrid restricted to the target's community


class SplitSpec(StrictModel):
    """How target and pool data are sampled for one protocol run."""

    population_fraction: float = Field(
        default=0.9, gt=0.0, le=1.0, description="Row fraction sampled from the non-target pool"
    )
    target_train_fraction: float = Field(
        default=0.7, gt=0.0, lt=1.0, description="Fraction of the target's reports used to train"
    )
    repeats: int = Field(default=5, ge=1, description="Repeated random splits per user")
    stratify: bool = Field(
        default=True, description="Stratify the target split by class when counts permit"
    )
    seed: int = Field(default=0, ge=0, description="Master seed")

    @property
    def test_fraction(self) -> float:
        return 1.0 - self.target_train_fraction


class SmoteConfig(StrictModel):
    """Synthetic minority oversampling of training sets."""

    enabled: bool = Field(default=True, description="Oversample training sets")
    k_neighbors: int = Field(default=5, ge=1, description="Same-class neighbours to interpolate")
    jitter_std: float = Field(
        default=1e-6, ge=0.0, description="Gaussian jitter for single-row minority classes"
    )
