"""
Community service for threshold-based neighbourhood detection.

A community is the set of users whose similarity to a target user is at
least a threshold. This module detects communities, sweeps community
sizes across a threshold grid and derives the cold-start threshold from
other users' best thresholds.
"""

from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from app.core.exceptions import EmptyInputError
from app.core.logging import get_logger
from app.domain.community import Community
from app.domain.profile import SimilarityMatrix
from app.schemas.common import Provenance
from app.schemas.community import SweepResult, SweepSummaryRow, ThresholdGrid
from app.utils.file_helpers import write_json, write_table
from app.utils.validators import validate_threshold

logger = get_logger(__name__)


def detect_community(matrix: SimilarityMatrix, target: str, th: float) -> Community:
    """
    Users other than ``target`` whose similarity to it is >= ``th``.

    An empty member set is a valid result; callers decide what it means.

    Raises:
        UnknownUserError: If ``target`` is not in the matrix
        ConfigValidationError: If ``th`` is outside [0, 1]
    """
    validate_threshold(th)
    i = matrix.index_of(target)
    row = matrix.values[i]
    members = frozenset(
        user_id for j, user_id in enumerate(matrix.user_ids) if j != i and row[j] >= th
    )
    return Community(target=target, threshold=th, members=members)


def sweep_communities(matrix: SimilarityMatrix, grid: ThresholdGrid) -> SweepResult:
    """
    Community size of every user at every grid threshold.

    Returns:
        Users x thresholds size table with a per-threshold summary of mean
        and std size and the number of users with a non-empty community
    """
    values = np.array(matrix.values, dtype=float)
    np.fill_diagonal(values, -np.inf)
    thresholds = np.asarray(grid.values, dtype=float)
    sizes = (values[:, :, None] >= thresholds[None, None, :]).sum(axis=1)

    summary = [
        SweepSummaryRow(
            threshold=float(th),
            mean_size=float(sizes[:, k].mean()) if len(sizes) else 0.0,
            std_size=float(sizes[:, k].std()) if len(sizes) else 0.0,
            modelable_users=int((sizes[:, k] > 0).sum()),
        )
        for k, th in enumerate(thresholds)
    ]
    logger.info(f"Swept {len(matrix.user_ids)} users over {len(thresholds)} thresholds")
    return SweepResult(
        thresholds=[float(t) for t in thresholds],
        user_ids=list(matrix.user_ids),
        sizes=sizes.astype(int).tolist(),
        summary=summary,
    )


def max_avg_threshold(per_user_best: Mapping[str, float]) -> float:
    """
    Mean of per-user accuracy-maximising thresholds.

    Used as the fixed threshold for a cold-start user who has no labelled
    data to pick their own.

    Raises:
        EmptyInputError: If the mapping is empty
    """
    if not per_user_best:
        raise EmptyInputError("No per-user thresholds to average")
    return float(np.mean(list(per_user_best.values())))


def community_size_heatmap(sweep: SweepResult) -> pd.DataFrame:
    """Users x thresholds community size table (heat map plot data)."""
    return pd.DataFrame(
        sweep.sizes,
        index=pd.Index(sweep.user_ids, name="user_id"),
        columns=[f"{t:g}" for t in sweep.thresholds],
    )


def write_sweep(
    sweep: SweepResult,
    out_dir: str | Path,
    extra: dict[str, Any] | None = None,
    provenance: Provenance | None = None,
) -> None:
    """
    Write the size table as CSV and the per-threshold summary as JSON.

    ``provenance`` becomes the table's ``.meta.json`` sidecar and the
    summary's ``provenance`` key.
    """
    out = Path(out_dir)
    write_table(
        out / "community_sizes.csv", community_size_heatmap(sweep), index=True, meta=provenance
    )
    payload: dict[str, Any] = {"summary": [row.model_dump() for row in sweep.summary]}
    if extra:
        payload.update(extra)
    if provenance is not None:
        payload["provenance"] = provenance.model_dump(mode="json")
    write_json(out / "community_summary.json", payload)
