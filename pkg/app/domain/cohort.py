"""
Cohort data model.

A cohort is the full per-user report table: feature schema, label mapping
and one row per self-report. Feature values live in a read-only float
matrix where NaN is the missing marker, so downstream numeric code never
has to unpack per-report objects.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from app.core.exceptions import DuplicateReportIdError, EmptyCohortError, IngestError

RAW_LABELS: tuple[int, ...] = (1, 2, 3, 4, 5)


class MoodClass(StrEnum):
    """Three-class valence labels."""

    NEGATIVE = "negative"
    NEUTRAL = "neutral"
    POSITIVE = "positive"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered, duplicate-free list of feature names."""

    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.feature_names:
            raise IngestError("Feature schema needs at least one feature")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise IngestError(
                "Duplicate feature names", details={"features": list(self.feature_names)}
            )

    @property
    def feature_count(self) -> int:
        return len(self.feature_names)


@dataclass(frozen=True)
class ClassMapping:
    """
    Total mapping from the raw 1..5 self-report scale to output classes.

    ``class_order`` fixes the column order of probability vectors and the
    precedence used for every tie-break.
    """

    name: str
    table: Mapping[int, str]
    class_order: tuple[str, ...]

    def __post_init__(self) -> None:
        if set(self.table) != set(RAW_LABELS):
            raise IngestError(f"Mapping {self.name!r} must cover raw labels 1..5")
        images = set(self.table.values())
        if images != set(self.class_order) or len(set(self.class_order)) != len(self.class_order):
            raise IngestError(f"Mapping {self.name!r} class_order must equal its image")

    def map(self, raw_label: int) -> str:
        return self.table[raw_label]

    @property
    def n_classes(self) -> int:
        return len(self.class_order)

    @classmethod
    def by_name(cls, name: str) -> ClassMapping:
        """Look up a built-in mapping (``three-class`` or ``five-class``)."""
        try:
            return BUILTIN_MAPPINGS[name]
        except KeyError as e:
            raise IngestError(
                f"Unknown class mapping: {name}", details={"known": sorted(BUILTIN_MAPPINGS)}
            ) from e


THREE_CLASS = ClassMapping(
    name="three-class",
    table={
        1: MoodClass.NEGATIVE.value,
        2: MoodClass.NEGATIVE.value,
        3: MoodClass.NEUTRAL.value,
        4: MoodClass.POSITIVE.value,
        5: MoodClass.POSITIVE.value,
    },
    class_order=(MoodClass.NEGATIVE.value, MoodClass.NEUTRAL.value, MoodClass.POSITIVE.value),
)

FIVE_CLASS = ClassMapping(
    name="five-class",
    table={label: str(label) for label in RAW_LABELS},
    class_order=tuple(str(label) for label in RAW_LABELS),
)

BUILTIN_MAPPINGS: dict[str, ClassMapping] = {m.name: m for m in (THREE_CLASS, FIVE_CLASS)}


@dataclass(frozen=True)
class Report:
    """One self-report: a labelled feature vector with an optional context tag."""

    report_id: str
    user_id: str
    raw_label: int
    class_label: str
    context: str | None
    features: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Cohort:
    """
    Immutable report table.

    Use :meth:`build` rather than the constructor; it validates identifiers
    and freezes the feature matrix.
    """

    schema: FeatureSchema
    mapping: ClassMapping
    report_ids: tuple[str, ...]
    user_of: tuple[str, ...]
    raw_labels: np.ndarray
    contexts: tuple[str | None, ...]
    features: np.ndarray
    user_index: dict[str, tuple[int, ...]] = field(init=False)
    class_labels: tuple[str, ...] = field(init=False)
    _id_index: dict[str, int] = field(init=False, repr=False)
    _ordinals: dict[str, int] = field(init=False, repr=False)
    _codes: np.ndarray = field(init=False, repr=False)

    @classmethod
    def build(
        cls,
        schema: FeatureSchema,
        mapping: ClassMapping,
        report_ids: Sequence[str],
        user_ids: Sequence[str],
        raw_labels: Sequence[int],
        contexts: Sequence[str | None],
        features: np.ndarray,
    ) -> Cohort:
        """
        Validate and assemble a cohort.

        Raises:
            DuplicateReportIdError: If two reports share an id
            EmptyCohortError: If there are no reports
            IngestError: If column lengths disagree or labels fall outside 1..5
        """
        n = len(report_ids)
        if n == 0:
            raise EmptyCohortError()
        matrix = np.array(features, dtype=float, copy=True).reshape(n, -1)
        if matrix.shape[1] != schema.feature_count:
            raise IngestError(
                f"Feature matrix has {matrix.shape[1]} columns, schema has {schema.feature_count}"
            )
        if not (len(user_ids) == len(raw_labels) == len(contexts) == n):
            raise IngestError("Report columns have different lengths")
        labels = np.asarray(raw_labels, dtype=int)
        if not np.isin(labels, RAW_LABELS).all():
            raise IngestError("Raw labels must lie in 1..5")
        matrix.setflags(write=False)
        labels.setflags(write=False)
        return cls(
            schema=schema,
            mapping=mapping,
            report_ids=tuple(str(r) for r in report_ids),
            user_of=tuple(str(u) for u in user_ids),
            raw_labels=labels,
            contexts=tuple(contexts),
            features=matrix,
        )

    def __post_init__(self) -> None:
        id_index: dict[str, int] = {}
        for pos, report_id in enumerate(self.report_ids):
            if report_id in id_index:
                raise DuplicateReportIdError(report_id)
            id_index[report_id] = pos
        positions: dict[str, list[int]] = {}
        for pos, user_id in enumerate(self.user_of):
            positions.setdefault(user_id, []).append(pos)
        object.__setattr__(self, "_id_index", id_index)
        object.__setattr__(self, "user_index", {u: tuple(p) for u, p in positions.items()})
        object.__setattr__(
            self, "class_labels", tuple(self.mapping.map(int(r)) for r in self.raw_labels)
        )
        object.__setattr__(self, "_ordinals", {u: i for i, u in enumerate(positions)})
        lookup = {c: i for i, c in enumerate(self.class_order)}
        codes = np.array([lookup[c] for c in self.class_labels], dtype=int)
        codes.setflags(write=False)
        object.__setattr__(self, "_codes", codes)

    def __len__(self) -> int:
        return len(self.report_ids)

    @property
    def users(self) -> tuple[str, ...]:
        """User ids in order of first appearance (the canonical user order)."""
        return tuple(self.user_index)

    @property
    def class_order(self) -> tuple[str, ...]:
        return self.mapping.class_order

    @property
    def has_contexts(self) -> bool:
        return any(c is not None for c in self.contexts)

    def user_ordinal(self, user_id: str) -> int:
        return self._ordinals[user_id]

    def positions_of(self, report_ids: Iterable[str]) -> np.ndarray:
        """Row positions of the given report ids, in cohort order."""
        return np.array(sorted(self._id_index[r] for r in report_ids), dtype=int)

    def label_codes(self, positions: np.ndarray | None = None) -> np.ndarray:
        """Class labels as indices into ``class_order``."""
        return self._codes if positions is None else self._codes[positions]

    def report(self, position: int) -> Report:
        return Report(
            report_id=self.report_ids[position],
            user_id=self.user_of[position],
            raw_label=int(self.raw_labels[position]),
            class_label=self.class_labels[position],
            context=self.contexts[position],
            features=tuple(float(v) for v in self.features[position]),
        )

    @property
    def reports(self) -> Iterator[Report]:
        for position in range(len(self)):
            yield self.report(position)
