"""
Cohort service for report table ingestion and statistics.

Handles reading and writing the canonical cohort CSV, the JSON schema
sidecar, class distributions and per-user eligibility statistics.
"""

from collections import Counter
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from app.core.exceptions import (
    BadFeatureValueError,
    EmptyCohortError,
    IngestError,
    IoError,
)
from app.core.logging import get_logger
from app.domain.cohort import RAW_LABELS, ClassMapping, Cohort, FeatureSchema, MoodClass
from app.schemas.cohort import ClassDistribution, EligibilityReport, IngestOptions
from app.utils.validators import parse_raw_label, validate_header

logger = get_logger(__name__)

NO_CONTEXT = "none"


class CohortService:
    """
    Service for cohort ingestion and descriptive statistics.

    The CSV format has a header row with ``user_id``, optional ``report_id``,
    ``label`` (integer 1..5), optional ``context`` and then numeric feature
    columns in schema order. Empty feature cells are missing values.
    """

    def load_csv(
        self,
        path: str | Path,
        mapping: ClassMapping,
        options: IngestOptions | None = None,
    ) -> Cohort:
        """
        Read and validate a cohort CSV.

        Args:
            path: CSV file path
            mapping: Class mapping applied to raw labels
            options: Column names

        Returns:
            Validated cohort

        Raises:
            IoError: If the file cannot be read
            MissingColumnError: If ``user_id`` or ``label`` is absent
            BadLabelError: If a label is not an integer in 1..5
            BadFeatureValueError: If a feature cell is neither numeric nor empty
            DuplicateReportIdError: If report ids repeat
            EmptyCohortError: If the file has no data rows
        """
        options = options or IngestOptions()
        source = Path(path)
        logger.info(f"Loading cohort from {source} with mapping {mapping.name}")

        try:
            # The header is read raw; read_csv would rename repeated names.
            header = pd.read_csv(
                source, header=None, nrows=1, dtype=str, keep_default_na=False, na_filter=False
            )
            frame = pd.read_csv(source, dtype=str, keep_default_na=False, na_filter=False)
        except FileNotFoundError as e:
            raise IoError(str(source), "file not found") from e
        except pd.errors.EmptyDataError as e:
            raise EmptyCohortError(f"{source} is empty") from e
        except (OSError, pd.errors.ParserError) as e:
            raise IoError(str(source), str(e)) from e

        validate_header(
            [str(c) for c in header.iloc[0]], [options.user_column, options.label_column]
        )
        columns = [str(c) for c in frame.columns]
        reserved = {
            options.user_column,
            options.label_column,
            options.report_id_column,
            options.context_column,
        }
        feature_names = tuple(c for c in columns if c not in reserved)
        if not feature_names:
            raise IngestError("Cohort CSV has no feature columns")
        if frame.empty:
            raise EmptyCohortError(f"{source} has a header but no reports")

        user_ids = [u.strip() for u in frame[options.user_column]]
        for row, user_id in enumerate(user_ids, start=1):
            if not user_id:
                raise IngestError(f"Empty user_id at row {row}", details={"row": row})

        raw_labels = [
            parse_raw_label(value, row)
            for row, value in enumerate(frame[options.label_column], start=1)
        ]

        if options.report_id_column in frame.columns:
            report_ids = [
                r.strip() or str(i)
                for i, r in enumerate(frame[options.report_id_column], start=1)
            ]
        else:
            report_ids = [str(i) for i in range(1, len(frame) + 1)]

        if options.context_column in frame.columns:
            contexts: list[str | None] = [c.strip() or None for c in frame[options.context_column]]
        else:
            contexts = [None] * len(frame)

        features = self._parse_features(frame, feature_names)

        cohort = Cohort.build(
            schema=FeatureSchema(feature_names),
            mapping=mapping,
            report_ids=report_ids,
            user_ids=user_ids,
            raw_labels=raw_labels,
            contexts=contexts,
            features=features,
        )
        logger.info(
            f"Loaded {len(cohort)} reports from {len(cohort.users)} users "
            f"({cohort.schema.feature_count} features, "
            f"{int(np.isnan(cohort.features).sum())} missing cells)"
        )
        return cohort

    @staticmethod
    def _parse_features(frame: pd.DataFrame, feature_names: tuple[str, ...]) -> np.ndarray:
        # Cells go through float() so written reprs read back bit-exactly.
        matrix = np.full((len(frame), len(feature_names)), np.nan, dtype=float)
        for j, name in enumerate(feature_names):
            for row, cell in enumerate(frame[name]):
                text = cell.strip()
                if not text:
                    continue
                try:
                    value = float(text)
                except ValueError as e:
                    raise BadFeatureValueError(row + 1, name, cell) from e
                if np.isnan(value):
                    raise BadFeatureValueError(row + 1, name, cell)
                matrix[row, j] = value
        return matrix

    def write_csv(self, cohort: Cohort, path: str | Path) -> Path:
        """
        Write a cohort in the canonical CSV format.

        Floats are written with round-trip precision and missing values as
        empty cells, so ``load_csv`` reproduces the cohort exactly.

        Raises:
            IoError: If the file cannot be written
        """
        target = Path(path)
        frame = pd.DataFrame(
            {
                "user_id": list(cohort.user_of),
                "report_id": list(cohort.report_ids),
                "label": [int(v) for v in cohort.raw_labels],
                "context": [c or "" for c in cohort.contexts],
            }
        )
        features = pd.DataFrame(cohort.features, columns=list(cohort.schema.feature_names))
        frame = pd.concat([frame, features], axis=1)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(target, index=False, na_rep="", lineterminator="\n")
        except OSError as e:
            raise IoError(str(target), str(e)) from e
        logger.info(f"Wrote cohort ({len(cohort)} reports) to {target}")
        return target

    def schema_sidecar(self, cohort: Cohort) -> dict[str, Any]:
        """JSON sidecar describing the schema of a cohort."""
        return {
            "feature_names": list(cohort.schema.feature_names),
            "feature_count": cohort.schema.feature_count,
            "mapping": cohort.mapping.name,
            "class_order": list(cohort.class_order),
            "n_users": len(cohort.users),
            "n_reports": len(cohort),
        }

    def eligibility_stats(self, cohort: Cohort) -> EligibilityReport:
        """
        Per-user class counts, class-presence partition and negative-count curve.

        The curve maps every n in 1..max negative count to the number of users
        with at least n negative reports, so any "enough data" cut-off can be
        read off it.
        """
        classes = cohort.class_order
        negative = MoodClass.NEGATIVE.value if MoodClass.NEGATIVE.value in classes else classes[0]

        per_user: dict[str, dict[str, int]] = {}
        for user_id, positions in cohort.user_index.items():
            counts = Counter(cohort.class_labels[p] for p in positions)
            per_user[user_id] = {c: int(counts.get(c, 0)) for c in classes}

        presence = dict.fromkeys(range(1, len(classes) + 1), 0)
        for counts in per_user.values():
            present = sum(1 for v in counts.values() if v > 0)
            presence[present] += 1

        negatives = [counts[negative] for counts in per_user.values()]
        max_negative = max(negatives, default=0)
        curve = {n: sum(1 for v in negatives if v >= n) for n in range(1, max_negative + 1)}

        return EligibilityReport(
            per_user_class_counts=per_user,
            users_by_class_presence=presence,
            negative_class=negative,
            negative_count_curve=curve,
        )

    def class_distribution(
        self, cohort: Cohort, by_context: bool = False
    ) -> list[ClassDistribution]:
        """
        Class fractions over the whole cohort, optionally per context group.

        Returns:
            The overall distribution first, then one entry per context tag
            (sorted; untagged reports grouped as ``none``)

        Raises:
            EmptyCohortError: If the cohort has no reports
        """
        if len(cohort) == 0:
            raise EmptyCohortError()

        groups: dict[str, list[int]] = {"all": list(range(len(cohort)))}
        if by_context:
            for position, context in enumerate(cohort.contexts):
                groups.setdefault(context or NO_CONTEXT, []).append(position)

        ordered = ["all"] + sorted(g for g in groups if g != "all")
        return [self._distribution(cohort, name, groups[name]) for name in ordered]

    @staticmethod
    def _distribution(cohort: Cohort, group: str, positions: list[int]) -> ClassDistribution:
        counts = Counter(cohort.class_labels[p] for p in positions)
        raw = Counter(int(cohort.raw_labels[p]) for p in positions)
        total = len(positions)
        return ClassDistribution(
            group=group,
            total=total,
            counts={c: int(counts.get(c, 0)) for c in cohort.class_order},
            fractions={c: counts.get(c, 0) / total for c in cohort.class_order},
            raw_counts={label: int(raw.get(label, 0)) for label in RAW_LABELS},
        )
