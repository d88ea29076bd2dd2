"""
Classifier schemas.

Random forest hyperparameters, the grid searched over them and the
grid search result table.
"""

from typing import Any

from pydantic import BaseModel, Field, field_validator

from app.schemas.common import StrictModel


class ForestParams(StrictModel):
    """Random forest hyperparameters."""

    n_trees: int = Field(default=100, ge=1, description="Number of trees")
    max_depth: int | None = Field(default=None, ge=1, description="Depth cap (None = unbounded)")
    min_samples_split: int = Field(default=2, ge=2, description="Minimum rows to split a node")
    features_per_split: int | None = Field(
        default=None, ge=1, description="Features tried per split (None = ceil(sqrt(|F|)))"
    )
    bootstrap: bool = Field(default=True, description="Fit each tree on a bootstrap sample")
    seed: int = Field(default=0, ge=0, description="Model seed")


class HyperGrid(StrictModel):
    """Candidate values per hyperparameter; evaluated by k-fold CV accuracy."""

    n_trees: list[int] = Field(default=[50, 100], min_length=1)
    max_depth: list[int | None] = Field(default=[None, 10], min_length=1)
    min_samples_split: list[int] = Field(default=[2, 5], min_length=1)
    folds: int = Field(default=3, ge=2, description="Cross-validation folds")
    scoring: str = Field(default="accuracy", description="CV score (only accuracy)")

    @field_validator("scoring")
    @classmethod
    def validate_scoring(cls, v: str) -> str:
        """Only accuracy is supported."""
        if v != "accuracy":
            raise ValueError("scoring must be 'accuracy'")
        return v

    def candidates(self) -> list[dict[str, Any]]:
        """Cartesian product in enumeration order (n_trees, max_depth, min_samples_split)."""
        return [
            {"n_trees": n, "max_depth": d, "min_samples_split": m}
            for n in self.n_trees
            for d in self.max_depth
            for m in self.min_samples_split
        ]


class GridSearchRow(BaseModel):
    """One candidate's cross-validation scores."""

    params: dict[str, Any]
    fold_scores: list[float]
    mean_score: float


class GridSearchResult(BaseModel):
    """Winning parameters plus the full CV table."""

    best_params: ForestParams
    table: list[GridSearchRow]
