"""
Profile service for user aggregation and similarity.

Scales features, collapses each user's reports into one mean profile and
builds the user x user cosine similarity matrix on the [0, 1] scale.
"""

from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from app.core.exceptions import EmptyCohortError
from app.core.logging import get_logger
from app.domain.cohort import Cohort
from app.domain.profile import ScalingMode, ScalingParams, SimilarityMatrix, UserProfileMatrix
from app.utils.file_helpers import write_table

logger = get_logger(__name__)


def fit_scaler(cohort: Cohort, mode: ScalingMode | str = ScalingMode.MINMAX) -> ScalingParams:
    """
    Learn per-feature scaling parameters over all non-missing entries.

    Features whose range (minmax) or std (zscore) is zero are flagged
    constant and scale to 0. A column with no observed values is treated
    as constant.

    Raises:
        EmptyCohortError: If the cohort has no reports
    """
    if len(cohort) == 0:
        raise EmptyCohortError()
    values = cohort.features
    observed = ~np.isnan(values).all(axis=0)
    with np.errstate(all="ignore"):
        minimum = np.where(observed, np.nanmin(np.where(observed, values, 0.0), axis=0), 0.0)
        maximum = np.where(observed, np.nanmax(np.where(observed, values, 0.0), axis=0), 0.0)
        mean = np.where(observed, np.nanmean(np.where(observed, values, 0.0), axis=0), 0.0)
        std = np.where(observed, np.nanstd(np.where(observed, values, 0.0), axis=0), 0.0)

    mode = ScalingMode(mode)
    if mode == ScalingMode.ZSCORE:
        constant = std == 0.0
    else:
        constant = (maximum - minimum) == 0.0
    return ScalingParams(
        mode=mode, minimum=minimum, maximum=maximum, mean=mean, std=std, constant=constant
    )


def aggregate_users(
    cohort: Cohort, scaler: ScalingParams, include_labels: bool = False
) -> UserProfileMatrix:
    """
    Mean-aggregate each user's scaled reports into one profile row.

    An entry for which the user has no observed value is filled with the
    cohort-wide scaled median of that feature. With ``include_labels`` the
    per-class label fractions of the user are appended as extra columns.

    Args:
        cohort: Report table
        scaler: Parameters from :func:`fit_scaler`
        include_labels: Append label fractions to each profile

    Returns:
        Profiles in canonical user order
    """
    scaled = scaler.transform(cohort.features)
    with np.errstate(all="ignore"):
        medians = np.nanmedian(scaled, axis=0) if scaled.size else np.zeros(scaled.shape[1])
    medians = np.nan_to_num(medians, nan=0.0)

    rows = []
    for user_id in cohort.users:
        block = scaled[list(cohort.user_index[user_id])]
        counts = (~np.isnan(block)).sum(axis=0)
        sums = np.nansum(block, axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            means = np.where(counts > 0, sums / np.maximum(counts, 1), medians)
        rows.append(means)

    columns = list(cohort.schema.feature_names)
    values = np.vstack(rows)
    if include_labels:
        fractions = np.array(
            [
                [
                    sum(1 for p in cohort.user_index[u] if cohort.class_labels[p] == c)
                    / len(cohort.user_index[u])
                    for c in cohort.class_order
                ]
                for u in cohort.users
            ]
        )
        values = np.hstack([values, fractions])
        columns += [f"frac_{c}" for c in cohort.class_order]

    logger.info(f"Aggregated {values.shape[0]} user profiles over {values.shape[1]} columns")
    return UserProfileMatrix(user_ids=cohort.users, column_names=tuple(columns), values=values)


def cosine_similarity(profiles: UserProfileMatrix) -> SimilarityMatrix:
    """
    Pairwise cosine similarity rescaled from [-1, 1] to [0, 1].

    A zero-norm profile has raw similarity 0 (stored 0.5) with everyone
    else and 1 with itself. The result is exactly symmetric with a unit
    diagonal.
    """
    values = np.asarray(profiles.values, dtype=float)
    if len(profiles.user_ids) < 2:
        logger.warning("Similarity matrix requested for fewer than two users")

    norms = np.linalg.norm(values, axis=1)
    nonzero = norms > 0.0
    safe = np.where(nonzero, norms, 1.0)
    unit = values / safe[:, None]
    raw = unit @ unit.T
    raw = np.where(nonzero[:, None] & nonzero[None, :], raw, 0.0)
    raw = np.clip(raw, -1.0, 1.0)

    stored = (raw + 1.0) / 2.0
    stored = (stored + stored.T) / 2.0
    np.fill_diagonal(stored, 1.0)
    stored.setflags(write=False)
    return SimilarityMatrix(user_ids=profiles.user_ids, values=stored)


def similarity_row(matrix: SimilarityMatrix, target: str) -> dict[str, float]:
    """
    Similarity of ``target`` to every other user, in canonical user order.

    Raises:
        UnknownUserError: If ``target`` is not in the matrix
    """
    i = matrix.index_of(target)
    return {
        user_id: float(matrix.values[i, j])
        for j, user_id in enumerate(matrix.user_ids)
        if j != i
    }


def dump_profiles(
    profiles: UserProfileMatrix, path: str | Path, meta: Any | None = None
) -> Path:
    """Write profiles as CSV (rows = users, columns = features)."""
    frame = pd.DataFrame(
        profiles.values,
        index=pd.Index(profiles.user_ids, name="user_id"),
        columns=list(profiles.column_names),
    )
    return write_table(path, frame, index=True, meta=meta)


def dump_similarity(
    matrix: SimilarityMatrix, path: str | Path, meta: Any | None = None
) -> Path:
    """Write the similarity matrix as CSV with user_id row and column headers."""
    frame = pd.DataFrame(
        matrix.values,
        index=pd.Index(matrix.user_ids, name="user_id"),
        columns=list(matrix.user_ids),
    )
    return write_table(path, frame, index=True, meta=meta)
