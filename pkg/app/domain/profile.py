"""User profile and similarity matrix containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from app.core.exceptions import UnknownUserError


class ScalingMode(StrEnum):
    """Per-feature scaling applied before aggregation."""

    MINMAX = "minmax"
    ZSCORE = "zscore"
    NONE = "none"


@dataclass(frozen=True, eq=False)
class ScalingParams:
    """
    Per-feature scaling parameters learned from a cohort.

    ``center``/``scale`` hold (min, max - min) for minmax and (mean, std)
    for zscore. Constant features scale to 0.
    """

    mode: ScalingMode
    minimum: np.ndarray
    maximum: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray

    def transform(self, values: np.ndarray) -> np.ndarray:
        """Scale a (rows x features) matrix; NaN entries stay NaN."""
        values = np.asarray(values, dtype=float)
        if self.mode == ScalingMode.NONE:
            return values.copy()
        if self.mode == ScalingMode.MINMAX:
            center, spread = self.minimum, self.maximum - self.minimum
        else:
            center, spread = self.mean, self.std
        safe = np.where(self.constant, 1.0, spread)
        scaled = (values - center) / safe
        return np.where(self.constant & ~np.isnan(values), 0.0, scaled)


@dataclass(frozen=True, eq=False)
class UserProfileMatrix:
    """One mean-aggregated row per user."""

    user_ids: tuple[str, ...]
    column_names: tuple[str, ...]
    values: np.ndarray

    def row(self, user_id: str) -> np.ndarray:
        try:
            return self.values[self.user_ids.index(user_id)]
        except ValueError as e:
            raise UnknownUserError(user_id) from e


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Symmetric user x user matrix of similarities on the [0, 1] scale."""

    user_ids: tuple[str, ...]
    values: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {u: i for i, u in enumerate(self.user_ids)})

    def __len__(self) -> int:
        return len(self.user_ids)

    def index_of(self, user_id: str) -> int:
        try:
            return self._index[user_id]
        except KeyError as e:
            raise UnknownUserError(user_id) from e

    def value(self, a: str, b: str) -> float:
        return float(self.values[self.index_of(a), self.index_of(b)])
