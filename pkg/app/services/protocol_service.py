"""
Protocol service: end-to-end evaluation runners.

Runs the population-level (PLM), hybrid (HM), user-level (ULM) and
community-based (CBM) protocols over a cohort, plus the two context
analyses: the per-context accuracy breakdown and the context-injection
sweep. Every (user, repeat) task derives its own seeds, so results do
not depend on how joblib schedules the tasks; reports are assembled in
canonical user order.
"""

from collections import defaultdict
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from datetime import UTC, datetime
from typing import Any

import numpy as np
from joblib import Parallel, delayed

from app.core.config import settings
from app.core.exceptions import (
    ConfigValidationError,
    EmptyCommunityError,
    EmptyTrainingSetError,
    InsufficientContextReportsError,
    InsufficientDataError,
    InsufficientRowsError,
    LeakageError,
    MissingContextColumnError,
)
from app.core.logging import get_logger
from app.core.rng import child_rng, derive_seed
from app.domain.cohort import Cohort
from app.domain.community import Community
from app.domain.profile import ScalingMode, SimilarityMatrix
from app.schemas.common import Provenance
from app.schemas.community import (
    FixedPolicy,
    MaxAvgPolicy,
    PerUserMaxPolicy,
    SelectionMode,
    ThresholdGrid,
)
from app.schemas.forest import ForestParams
from app.schemas.metrics import MetricsBundle
from app.schemas.protocol import (
    AggregateMetric,
    ClassifierConfig,
    ClassifierKind,
    ContextBreakdown,
    ContextGroupRow,
    ExperimentReport,
    InjectionConfig,
    InjectionRow,
    InjectionSweepReport,
    MetricSummary,
    PredictionRecord,
    ProtocolConfig,
    ThresholdSummaryRow,
    UserResult,
    UserStatus,
)
from app.schemas.sampling import Protocol, SmoteConfig
from app.services.cohort_service import NO_CONTEXT, CohortService
from app.services.community_service import (
    detect_community,
    max_avg_threshold,
    sweep_communities,
)
from app.services.forest_service import (
    Classifier,
    MajorityClassifier,
    RandomForestModel,
    fit_forest,
    grid_search,
    rank_importances,
)
from app.services.profile_service import aggregate_users, cosine_similarity, fit_scaler
from app.services.sampling_service import (
    carve_validation,
    fit_medians,
    impute,
    make_split,
    smote_oversample,
)
from app.utils.file_helpers import config_hash
from app.utils.metrics import (
    AUC_SCHEME,
    F1_SCHEME,
    aggregate_stats,
    confusion_counts,
    evaluate,
)

logger = get_logger(__name__)

METRICS = ("accuracy", "macro_f1", "auc_ovr_macro")
TOP_FEATURES = 20

# Per-user failures; anything else aborts the run.
SKIPPABLE = (
    InsufficientDataError,
    EmptyCommunityError,
    EmptyTrainingSetError,
)


@dataclass
class TaskOutcome:
    """Result of one (user, repeat) evaluation, or the reason it was skipped."""

    user_id: str
    repeat: int
    threshold: float | None = None
    community_size: int | None = None
    metrics: MetricsBundle | None = None
    reason: str | None = None
    report_ids: tuple[str, ...] = ()
    truth: tuple[str, ...] = ()
    pred: tuple[str, ...] = ()
    importances: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.metrics is not None


def provenance(seed: int, echo: dict[str, Any]) -> Provenance:
    """Provenance block; the timestamp is only set when enabled in settings."""
    return Provenance(
        engine_version=settings.APP_VERSION,
        master_seed=seed,
        config_hash=config_hash(echo),
        created_at=datetime.now(UTC).isoformat() if settings.INCLUDE_TIMESTAMPS else None,
    )


def build_similarity(cohort: Cohort) -> SimilarityMatrix:
    """Min-max scaled mean profiles compared by cosine similarity."""
    profiles = aggregate_users(cohort, fit_scaler(cohort, ScalingMode.MINMAX))
    return cosine_similarity(profiles)


ClassifierBuilder = Callable[
    [ClassifierConfig, np.ndarray, np.ndarray, Sequence[str], Sequence[str], int], Classifier
]

# Fit callables by classifier kind; build_classifier dispatches through it.
CLASSIFIER_BUILDERS: dict[ClassifierKind, ClassifierBuilder] = {}


def register_classifier(kind: ClassifierKind) -> Callable[[ClassifierBuilder], ClassifierBuilder]:
    """Register the fit callable for ``kind``, replacing any earlier one."""

    def decorator(builder: ClassifierBuilder) -> ClassifierBuilder:
        CLASSIFIER_BUILDERS[ClassifierKind(kind)] = builder
        return builder

    return decorator


@register_classifier(ClassifierKind.MAJORITY)
def _fit_majority(
    config: ClassifierConfig,
    rows: np.ndarray,
    labels: np.ndarray,
    class_order: Sequence[str],
    feature_names: Sequence[str],
    seed: int,
) -> Classifier:
    return MajorityClassifier.fit(labels, class_order)


@register_classifier(ClassifierKind.FOREST)
def _fit_forest(
    config: ClassifierConfig,
    rows: np.ndarray,
    labels: np.ndarray,
    class_order: Sequence[str],
    feature_names: Sequence[str],
    seed: int,
) -> Classifier:
    params = config.forest.model_copy(update={"seed": seed})
    return fit_forest(rows, labels, params, class_order, feature_names)


@register_classifier(ClassifierKind.GRID)
def _fit_grid(
    config: ClassifierConfig,
    rows: np.ndarray,
    labels: np.ndarray,
    class_order: Sequence[str],
    feature_names: Sequence[str],
    seed: int,
) -> Classifier:
    """Grid-searched forest; too few rows for the folds falls back to the base parameters."""
    params: ForestParams = config.forest.model_copy(update={"seed": seed})
    try:
        params = grid_search(rows, labels, config.grid, seed, class_order, base=params).best_params
    except InsufficientRowsError as e:
        logger.warning(f"Grid search skipped, using base forest: {e.message}")
    return fit_forest(rows, labels, params, class_order, feature_names)


def build_classifier(
    config: ClassifierConfig,
    rows: np.ndarray,
    labels: np.ndarray,
    class_order: Sequence[str],
    feature_names: Sequence[str],
    seed: int,
) -> Classifier:
    """
    Fit the classifier registered for ``config.kind``.

    Raises:
        ConfigValidationError: If no builder is registered for the kind
    """
    builder = CLASSIFIER_BUILDERS.get(config.kind)
    if builder is None:
        raise ConfigValidationError(
            f"No classifier registered for kind {config.kind}",
            details={"registered": sorted(k.value for k in CLASSIFIER_BUILDERS)},
        )
    return builder(config, rows, labels, class_order, feature_names, seed)


def fit_and_score(
    cohort: Cohort,
    smote: SmoteConfig,
    classifier: ClassifierConfig,
    train_pos: np.ndarray,
    eval_pos: np.ndarray,
    smote_seed: int,
    model_seed: int,
) -> tuple[MetricsBundle, list[str], np.ndarray | None]:
    """
    Impute, oversample, fit and evaluate one train/eval pair of row sets.

    Missing values are filled with training medians on both sides; SMOTE
    touches the training rows only.

    Returns:
        Metrics, predicted class names and forest importances (None for the
        majority baseline)

    Raises:
        LeakageError: If a row appears on both sides
    """
    shared = np.intersect1d(train_pos, eval_pos)
    if len(shared):
        raise LeakageError([cohort.report_ids[p] for p in shared])
    if len(train_pos) == 0:
        raise EmptyTrainingSetError()

    medians = fit_medians(cohort.features[train_pos])
    train_x = impute(cohort.features[train_pos], medians)
    eval_x = impute(cohort.features[eval_pos], medians)
    train_y = cohort.label_codes(train_pos)
    train_x, train_y, _ = smote_oversample(train_x, train_y, smote, smote_seed)

    class_order = cohort.class_order
    model = build_classifier(
        classifier, train_x, train_y, class_order, cohort.schema.feature_names, model_seed
    )
    proba = model.predict_proba(eval_x)
    pred = [class_order[c] for c in np.argmax(proba, axis=1)]
    truth = [class_order[c] for c in cohort.label_codes(eval_pos)]
    importances = model.feature_importances if isinstance(model, RandomForestModel) else None
    return evaluate(truth, pred, proba, class_order), pred, importances


def _task_seeds(config: ProtocolConfig, ordinal: int, repeat: int) -> tuple[int, int]:
    tag = config.protocol.value
    return (
        derive_seed(config.seed, "smote", tag, ordinal, repeat),
        derive_seed(config.seed, tag, "forest", ordinal, repeat),
    )


def run_task(
    cohort: Cohort,
    config: ProtocolConfig,
    target: str,
    community: Community | None,
    repeat: int,
) -> TaskOutcome:
    """Evaluate one (user, repeat) on the target's test rows."""
    outcome = TaskOutcome(
        user_id=target,
        repeat=repeat,
        threshold=community.threshold if community else None,
        community_size=community.size if community else None,
    )
    try:
        split = make_split(cohort, config.protocol, target, community, config.split, repeat)
        train_pos = cohort.positions_of(split.train_ids)
        test_pos = cohort.positions_of(split.test_ids)
        metrics, pred, importances = fit_and_score(
            cohort,
            config.smote,
            config.classifier,
            train_pos,
            test_pos,
            *_task_seeds(config, cohort.user_ordinal(target), repeat),
        )
    except SKIPPABLE as e:
        outcome.reason = e.message
        return outcome

    outcome.metrics = metrics
    outcome.report_ids = tuple(cohort.report_ids[p] for p in test_pos)
    outcome.truth = tuple(cohort.class_labels[p] for p in test_pos)
    outcome.pred = tuple(pred)
    outcome.importances = importances
    return outcome


def validation_task(
    cohort: Cohort,
    config: ProtocolConfig,
    target: str,
    community: Community | None,
    repeat: int,
    fraction: float,
) -> TaskOutcome:
    """Evaluate one (user, repeat) on a slice held out of the target's training rows."""
    outcome = TaskOutcome(
        user_id=target,
        repeat=repeat,
        threshold=community.threshold if community else None,
        community_size=community.size if community else None,
    )
    try:
        split = make_split(cohort, config.protocol, target, community, config.split, repeat)
        reduced, held = carve_validation(cohort, target, split, fraction, config.seed, repeat)
        metrics, _, _ = fit_and_score(
            cohort,
            config.smote,
            config.classifier,
            cohort.positions_of(reduced.train_ids),
            cohort.positions_of(held),
            *_task_seeds(config, cohort.user_ordinal(target), repeat),
        )
    except SKIPPABLE as e:
        outcome.reason = e.message
        return outcome
    outcome.metrics = metrics
    return outcome


def _mean_accuracy(outcomes: list[TaskOutcome]) -> float | None:
    if not outcomes or not all(o.ok for o in outcomes):
        return None
    return float(np.mean([o.metrics.accuracy for o in outcomes if o.metrics]))


def summarize_user(
    user_id: str,
    outcomes: list[TaskOutcome],
    threshold_accuracy: dict[str, float] | None = None,
) -> UserResult:
    """Fold a user's repeat outcomes into a UserResult; any failed repeat skips the user."""
    first = outcomes[0] if outcomes else None
    common = {
        "user_id": user_id,
        "threshold": first.threshold if first else None,
        "community_size": first.community_size if first else None,
        "threshold_accuracy": threshold_accuracy or {},
    }
    failed = next((o for o in outcomes if not o.ok), None)
    if failed is not None or not outcomes:
        reason = failed.reason if failed else "no evaluations"
        logger.warning(f"User {user_id} skipped: {reason}")
        return UserResult(status=UserStatus.SKIPPED, reason=reason, **common)

    bundles = [o.metrics for o in outcomes if o.metrics is not None]
    summary = {}
    for name in METRICS:
        values = [getattr(b, name) for b in bundles if getattr(b, name) is not None]
        mean, std = aggregate_stats(values) if values else (None, None)
        summary[name] = MetricSummary(mean=mean, std=std)
    logger.info(f"User {user_id}: accuracy {summary['accuracy'].mean:.4f}")
    return UserResult(status=UserStatus.OK, repeats=bundles, summary=summary, **common)


def aggregate_users_metrics(users: list[UserResult]) -> dict[str, AggregateMetric]:
    """Mean of per-user means, with std across users and mean std across repeats."""
    ok = [u for u in users if u.status == UserStatus.OK]
    aggregate = {}
    for name in METRICS:
        means = [u.summary[name].mean for u in ok if u.summary[name].mean is not None]
        stds = [u.summary[name].std for u in ok if u.summary[name].std is not None]
        if not means:
            aggregate[name] = AggregateMetric(
                mean=None, std_across_users=None, std_across_repeats=None
            )
            continue
        mean, std = aggregate_stats(means)
        aggregate[name] = AggregateMetric(
            mean=mean, std_across_users=std, std_across_repeats=float(np.mean(stds))
        )
    return aggregate


class ProtocolRunner:
    """
    Runs one protocol configuration over a cohort.

    Args:
        cohort: Report table
        config: Protocol configuration
        n_jobs: joblib workers (defaults to the THREADS setting)
        similarity: Precomputed user similarity (built on demand for CBM)
    """

    def __init__(
        self,
        cohort: Cohort,
        config: ProtocolConfig,
        n_jobs: int | None = None,
        similarity: SimilarityMatrix | None = None,
    ):
        self.cohort = cohort
        self.config = config
        self.n_jobs = settings.n_jobs if n_jobs is None else n_jobs
        self._similarity = similarity

    @property
    def similarity(self) -> SimilarityMatrix:
        if self._similarity is None:
            self._similarity = build_similarity(self.cohort)
        return self._similarity

    def _map(
        self, fn: Callable[..., TaskOutcome], jobs: list[tuple[Any, ...]]
    ) -> list[TaskOutcome]:
        if not jobs:
            return []
        results = Parallel(n_jobs=self.n_jobs)(
            delayed(fn)(self.cohort, self.config, *args) for args in jobs
        )
        return list(results)

    def _group(self, outcomes: list[TaskOutcome]) -> dict[str, list[TaskOutcome]]:
        grouped: dict[str, list[TaskOutcome]] = defaultdict(list)
        for outcome in outcomes:
            grouped[outcome.user_id].append(outcome)
        return grouped

    def run(self) -> ExperimentReport:
        """Dispatch on the configured protocol."""
        logger.info(
            f"Running {self.config.protocol} on {len(self.cohort.users)} users "
            f"x {self.config.split.repeats} repeats"
        )
        match self.config.protocol:
            case Protocol.PLM | Protocol.HM:
                report = self.run_population()
            case Protocol.ULM:
                report = self.run_ulm()
            case Protocol.CBM:
                report = self.run_cbm()
        logger.info(
            f"{self.config.protocol} done: {report.n_users_ok} ok, "
            f"{report.n_users_skipped} skipped, accuracy {report.aggregate['accuracy'].mean}"
        )
        return report

    def run_population(self) -> ExperimentReport:
        """PLM or HM: every user is a target, trained with the rest of the cohort."""
        users = self.cohort.users
        if len(users) < 2:
            raise InsufficientDataError(
                f"{self.config.protocol} needs at least two users", details={"users": len(users)}
            )
        repeats = range(self.config.split.repeats)
        outcomes = self._group(self._map(run_task, [(u, None, r) for u in users for r in repeats]))
        results = [summarize_user(u, outcomes[u]) for u in users]
        return self._report(results, outcomes)

    def run_ulm(self) -> ExperimentReport:
        """User-level models for users with enough reports in every class."""
        eligibility = CohortService().eligibility_stats(self.cohort)
        minimum = self.config.ulm_min_per_class
        eligible, skipped = [], {}
        for user_id in self.cohort.users:
            counts = eligibility.per_user_class_counts[user_id]
            if any(v == 0 for v in counts.values()):
                skipped[user_id] = "class absent"
            elif any(v < minimum for v in counts.values()):
                skipped[user_id] = f"fewer than {minimum} reports in a class"
            else:
                eligible.append(user_id)
        logger.info(f"ULM: {len(eligible)} of {len(self.cohort.users)} users eligible")

        repeats = range(self.config.split.repeats)
        outcomes = self._group(
            self._map(run_task, [(u, None, r) for u in eligible for r in repeats])
        )
        results = []
        for user_id in self.cohort.users:
            if user_id in skipped:
                logger.warning(f"User {user_id} skipped: {skipped[user_id]}")
                results.append(
                    UserResult(user_id=user_id, status=UserStatus.SKIPPED, reason=skipped[user_id])
                )
            else:
                results.append(summarize_user(user_id, outcomes[user_id]))
        return self._report(results, outcomes, eligibility=eligibility.model_dump(mode="json"))

    def run_cbm(self) -> ExperimentReport:
        """Community-based models under the configured threshold policy."""
        policy = self.config.threshold_policy
        if isinstance(policy, FixedPolicy):
            return self._run_fixed(policy.threshold)
        if isinstance(policy, PerUserMaxPolicy):
            return self._run_per_user_max(policy)
        if isinstance(policy, MaxAvgPolicy):
            return self._run_max_avg(policy)
        raise ConfigValidationError("CBM requires a threshold_policy")

    def _run_at(
        self, thresholds: dict[str, float]
    ) -> tuple[list[UserResult], dict[str, list[TaskOutcome]]]:
        """Evaluate each user at its own fixed threshold."""
        jobs, skipped = [], {}
        for user_id in self.cohort.users:
            if user_id not in thresholds:
                continue
            community = detect_community(self.similarity, user_id, thresholds[user_id])
            if community.is_empty:
                skipped[user_id] = community
                continue
            jobs += [(user_id, community, r) for r in range(self.config.split.repeats)]
        outcomes = self._group(self._map(run_task, jobs))

        results = []
        for user_id in self.cohort.users:
            if user_id in skipped:
                th = skipped[user_id].threshold
                reason = f"empty community at threshold {th:g}"
                logger.warning(f"User {user_id} skipped: {reason}")
                results.append(
                    UserResult(
                        user_id=user_id,
                        status=UserStatus.SKIPPED,
                        reason=reason,
                        threshold=th,
                        community_size=0,
                    )
                )
            elif user_id in thresholds:
                results.append(summarize_user(user_id, outcomes[user_id]))
        return results, outcomes

    def _run_fixed(self, threshold: float) -> ExperimentReport:
        results, outcomes = self._run_at(dict.fromkeys(self.cohort.users, threshold))
        sizes = [
            detect_community(self.similarity, u, threshold).size for u in self.cohort.users
        ]
        row = self._final_row(f"{threshold:g}", results, summary_label=False)
        row.mean_community_size = float(np.mean(sizes))
        row.modelable_users = int(sum(1 for s in sizes if s > 0))
        return self._report(results, outcomes, threshold_summary=[row])

    def sweep(
        self,
        grid: ThresholdGrid,
        selection: SelectionMode = SelectionMode.TEST,
        fraction: float = 0.2,
    ) -> dict[tuple[str, float], list[TaskOutcome]]:
        """
        Run every user at every grid threshold with a non-empty community.

        Each cell uses exactly the task a Fixed run at that threshold would
        use; in validation mode the cell is scored on the held-out slice of
        the target's training rows instead of its test rows. A task depends
        on the threshold only through the community members, so thresholds
        yielding the same members share one evaluation.
        """
        cell_members: dict[tuple[str, float], tuple[frozenset[str], int]] = {}
        unique: dict[tuple[str, frozenset[str], int], tuple[Any, ...]] = {}
        for user_id in self.cohort.users:
            for th in grid.values:
                community = detect_community(self.similarity, user_id, th)
                if community.is_empty:
                    continue
                cell_members[(user_id, th)] = (community.members, community.size)
                for r in range(self.config.split.repeats):
                    unique.setdefault(
                        (user_id, community.members, r),
                        (user_id, community, r)
                        if selection == SelectionMode.TEST
                        else (user_id, community, r, fraction),
                    )
        fn = run_task if selection == SelectionMode.TEST else validation_task
        evaluated = dict(zip(unique, self._map(fn, list(unique.values())), strict=True))

        cells: dict[tuple[str, float], list[TaskOutcome]] = defaultdict(list)
        for (user_id, th), (members, size) in cell_members.items():
            for r in range(self.config.split.repeats):
                outcome = evaluated[(user_id, members, r)]
                cells[(user_id, float(th))].append(
                    replace(outcome, threshold=th, community_size=size)
                )
        logger.info(
            f"Threshold sweep: {len(unique)} distinct tasks for {len(cell_members)} cells "
            f"over {len(grid.values)} thresholds"
        )
        return cells

    @staticmethod
    def best_thresholds(
        cells: dict[tuple[str, float], list[TaskOutcome]], users: Sequence[str], grid: ThresholdGrid
    ) -> tuple[dict[str, float], dict[str, dict[str, float]]]:
        """
        Per-user accuracy-argmax threshold, ties going to the larger threshold.

        Returns:
            Best threshold per user (users with no scorable threshold are
            absent) and each user's threshold -> mean accuracy table
        """
        best: dict[str, float] = {}
        table: dict[str, dict[str, float]] = {}
        for user_id in users:
            scores: dict[str, float] = {}
            top: float | None = None
            for th in grid.values:
                acc = _mean_accuracy(cells.get((user_id, th), []))
                if acc is None:
                    continue
                scores[f"{th:g}"] = acc
                if top is None or acc >= top:
                    top, best[user_id] = acc, th
            table[user_id] = scores
        return best, table

    def _run_per_user_max(self, policy: PerUserMaxPolicy) -> ExperimentReport:
        cells = self.sweep(policy.grid, policy.selection, policy.validation_fraction)
        best, table = self.best_thresholds(cells, self.cohort.users, policy.grid)

        if policy.selection == SelectionMode.TEST:
            chosen = {u: cells[(u, th)] for u, th in best.items()}
        else:
            _, refit = self._run_at(best)
            chosen = {u: refit.get(u, []) for u in best}

        results = []
        for user_id in self.cohort.users:
            if user_id in best:
                results.append(summarize_user(user_id, chosen[user_id], table[user_id]))
            else:
                reason = "empty community at every threshold"
                logger.warning(f"User {user_id} skipped: {reason}")
                results.append(
                    UserResult(user_id=user_id, status=UserStatus.SKIPPED, reason=reason)
                )

        summary_cells = (
            cells if policy.selection == SelectionMode.TEST else self.sweep(policy.grid)
        )
        rows = self._grid_rows(policy.grid, summary_cells)
        rows.append(self._final_row("MAX", results))
        return self._report(
            results,
            chosen,
            threshold_summary=rows,
            selection_optimistic=policy.selection == SelectionMode.TEST,
        )

    def _run_max_avg(self, policy: MaxAvgPolicy) -> ExperimentReport:
        rows: list[ThresholdSummaryRow] = []
        if policy.value is not None:
            thresholds = dict.fromkeys(self.cohort.users, policy.value)
        else:
            cells = self.sweep(policy.grid)
            best, _ = self.best_thresholds(cells, self.cohort.users, policy.grid)
            thresholds = {}
            for user_id in self.cohort.users:
                others = {u: th for u, th in best.items() if u != user_id}
                if others:
                    thresholds[user_id] = max_avg_threshold(others)
            rows = self._grid_rows(policy.grid, cells)

        results, outcomes = self._run_at(thresholds)
        present = {r.user_id for r in results}
        for user_id in self.cohort.users:
            if user_id not in present:
                results.append(
                    UserResult(
                        user_id=user_id,
                        status=UserStatus.SKIPPED,
                        reason="no other users with a best threshold",
                    )
                )
        order = {u: i for i, u in enumerate(self.cohort.users)}
        results.sort(key=lambda r: order[r.user_id])
        rows.append(self._final_row("MAX-AVG", results))
        return self._report(results, outcomes, threshold_summary=rows)

    def _grid_rows(
        self, grid: ThresholdGrid, cells: dict[tuple[str, float], list[TaskOutcome]]
    ) -> list[ThresholdSummaryRow]:
        sizes = np.asarray(sweep_communities(self.similarity, grid).sizes, dtype=float)
        rows = []
        for k, th in enumerate(grid.values):
            accs = [
                acc
                for u in self.cohort.users
                if (acc := _mean_accuracy(cells.get((u, th), []))) is not None
            ]
            mean, std = aggregate_stats(accs) if accs else (None, None)
            rows.append(
                ThresholdSummaryRow(
                    label=f"{th:g}",
                    threshold=th,
                    mean_accuracy=mean,
                    std_accuracy=std,
                    mean_community_size=float(sizes[:, k].mean()),
                    modelable_users=int((sizes[:, k] > 0).sum()),
                )
            )
        return rows

    @staticmethod
    def _final_row(
        label: str, results: list[UserResult], summary_label: bool = True
    ) -> ThresholdSummaryRow:
        ok = [r for r in results if r.status == UserStatus.OK]
        accs = [r.summary["accuracy"].mean for r in ok if r.summary["accuracy"].mean is not None]
        mean, std = aggregate_stats(accs) if accs else (None, None)
        thresholds = [r.threshold for r in ok if r.threshold is not None]
        sizes = [r.community_size for r in ok if r.community_size is not None]
        mean_th = float(np.mean(thresholds)) if thresholds else None
        return ThresholdSummaryRow(
            label=f"{label} ({mean_th:.2f})" if mean_th is not None and summary_label else label,
            threshold=mean_th,
            mean_accuracy=mean,
            std_accuracy=std,
            mean_community_size=float(np.mean(sizes)) if sizes else None,
            modelable_users=len(ok),
        )

    def _report(
        self,
        results: list[UserResult],
        outcomes: dict[str, list[TaskOutcome]],
        eligibility: dict[str, Any] | None = None,
        threshold_summary: list[ThresholdSummaryRow] | None = None,
        selection_optimistic: bool = False,
    ) -> ExperimentReport:
        cohort = self.cohort
        ok_users = [r.user_id for r in results if r.status == UserStatus.OK]
        pooled = [o for u in ok_users for o in outcomes.get(u, [])]

        truth = [t for o in pooled for t in o.truth]
        pred = [p for o in pooled for p in o.pred]
        confusion = (
            confusion_counts(truth, pred, cohort.class_order)
            if truth
            else {t: dict.fromkeys(cohort.class_order, 0) for t in cohort.class_order}
        )

        per_user_importance = []
        for user_id in ok_users:
            vectors = [o.importances for o in outcomes[user_id] if o.importances is not None]
            if vectors:
                per_user_importance.append(np.mean(vectors, axis=0))
        top = (
            rank_importances(
                np.mean(per_user_importance, axis=0), cohort.schema.feature_names, TOP_FEATURES
            )
            if per_user_importance
            else []
        )

        predictions = []
        if self.config.keep_predictions:
            positions = {r: i for i, r in enumerate(cohort.report_ids)}
            for o in pooled:
                for report_id, t, p in zip(o.report_ids, o.truth, o.pred, strict=True):
                    predictions.append(
                        PredictionRecord(
                            report_id=report_id,
                            user_id=o.user_id,
                            repeat=o.repeat,
                            context=cohort.contexts[positions[report_id]],
                            truth=t,
                            pred=p,
                        )
                    )

        echo = self.config.model_dump(mode="json")
        return ExperimentReport(
            protocol=self.config.protocol,
            config=echo,
            schema_sidecar=CohortService().schema_sidecar(cohort),
            n_users_total=len(cohort.users),
            n_users_ok=len(ok_users),
            n_users_skipped=len(results) - len(ok_users),
            aggregate=aggregate_users_metrics(results),
            users=results,
            metric_schemes={"macro_f1": F1_SCHEME, "auc_ovr_macro": AUC_SCHEME},
            eligibility=eligibility,
            threshold_summary=threshold_summary or [],
            selection_optimistic=selection_optimistic,
            feature_importance_top=top,
            confusion=confusion,
            predictions=predictions,
            provenance=provenance(self.config.seed, echo),
        )


def _run(
    protocol: Protocol, cohort: Cohort, config: ProtocolConfig, n_jobs: int | None
) -> ExperimentReport:
    if config.protocol != protocol:
        raise ConfigValidationError(
            f"Config is for {config.protocol}, not {protocol}",
            details={"protocol": config.protocol.value},
        )
    return ProtocolRunner(cohort, config, n_jobs=n_jobs).run()


def run_plm(cohort: Cohort, config: ProtocolConfig, n_jobs: int | None = None) -> ExperimentReport:
    return _run(Protocol.PLM, cohort, config, n_jobs)


def run_hm(cohort: Cohort, config: ProtocolConfig, n_jobs: int | None = None) -> ExperimentReport:
    return _run(Protocol.HM, cohort, config, n_jobs)


def run_ulm(cohort: Cohort, config: ProtocolConfig, n_jobs: int | None = None) -> ExperimentReport:
    return _run(Protocol.ULM, cohort, config, n_jobs)


def run_cbm(cohort: Cohort, config: ProtocolConfig, n_jobs: int | None = None) -> ExperimentReport:
    return _run(Protocol.CBM, cohort, config, n_jobs)


def context_breakdown(
    source: ExperimentReport | Sequence[PredictionRecord], protocol: Protocol | None = None
) -> ContextBreakdown:
    """
    Accuracy and support per context group over pooled test predictions.

    The first row is the overall pool; contexts follow in sorted order with
    untagged predictions grouped as ``none``.

    Raises:
        ConfigValidationError: If a report carries no stored predictions
        MissingContextColumnError: If no prediction has a context tag
    """
    if isinstance(source, ExperimentReport):
        if not source.predictions:
            raise ConfigValidationError(
                "Report has no stored predictions; run with keep_predictions enabled"
            )
        protocol = source.protocol
        origin: Provenance | None = source.provenance
        records: Sequence[PredictionRecord] = source.predictions
    else:
        origin = None
        records = source
    if not any(r.context is not None for r in records):
        raise MissingContextColumnError()

    groups: dict[str, list[bool]] = defaultdict(list)
    for record in records:
        hit = record.truth == record.pred
        groups["overall"].append(hit)
        groups[record.context or NO_CONTEXT].append(hit)

    names = ["overall"] + sorted(g for g in groups if g != "overall")
    rows = [
        ContextGroupRow(
            group=name,
            support=len(groups[name]),
            accuracy=sum(groups[name]) / len(groups[name]),
        )
        for name in names
    ]
    return ContextBreakdown(protocol=protocol, rows=rows, provenance=origin)


def injection_rows(
    cohort: Cohort, config: InjectionConfig, repeat: int, count: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Train and test positions of one (repeat, count) cell of the injection sweep.

    The test set is a fixed per-user split for the repeat. Training holds
    every non-target-context training report plus the first ``count`` of
    the repeat's shuffled target-context training reports, so counts nest.

    Raises:
        InsufficientContextReportsError: If the repeat has fewer target-context
            training reports than ``count`` or no target-context test report
    """
    train, test = [], []
    for user_id in cohort.users:
        positions = np.array(cohort.user_index[user_id], dtype=int)
        n = len(positions)
        n_test = 0 if n < 2 else min(n - 1, max(1, int(np.floor(config.test_fraction * n + 1e-9))))
        shuffled = child_rng(
            config.seed, "injection", "split", cohort.user_ordinal(user_id), repeat
        ).permutation(positions)
        test.extend(shuffled[:n_test])
        train.extend(shuffled[n_test:])

    target = config.target_context
    in_context = np.array([cohort.contexts[p] == target for p in range(len(cohort))])
    train_arr, test_arr = np.sort(np.array(train, dtype=int)), np.sort(np.array(test, dtype=int))
    context_train = train_arr[in_context[train_arr]]
    if len(context_train) < count:
        raise InsufficientContextReportsError(target, count, len(context_train))
    if not in_context[test_arr].any():
        raise InsufficientContextReportsError(target, 1, 0)

    injected = child_rng(config.seed, "injection", "inject", repeat).permutation(context_train)
    chosen = np.sort(np.concatenate([train_arr[~in_context[train_arr]], injected[:count]]))
    return chosen, test_arr


def _injection_task(
    cohort: Cohort, config: InjectionConfig, repeat: int, count: int
) -> tuple[int, int, float, float]:
    train_pos, test_pos = injection_rows(cohort, config, repeat, count)
    _, pred, _ = fit_and_score(
        cohort,
        config.smote,
        config.classifier,
        train_pos,
        test_pos,
        derive_seed(config.seed, "smote", "injection", repeat, count),
        derive_seed(config.seed, "injection", "forest", repeat),
    )
    truth = [cohort.class_labels[p] for p in test_pos]
    hits = np.array([t == p for t, p in zip(truth, pred, strict=True)])
    in_context = np.array([cohort.contexts[p] == config.target_context for p in test_pos])
    return repeat, count, float(hits.mean()), float(hits[in_context].mean())


def injection_sweep(
    cohort: Cohort, config: InjectionConfig, n_jobs: int | None = None
) -> InjectionSweepReport:
    """
    Accuracy as target-context reports are added to a fixed training base.

    Raises:
        MissingContextColumnError: If the cohort has no context tags
        InsufficientContextReportsError: If a repeat lacks reports for the
            largest count
    """
    if not cohort.has_contexts:
        raise MissingContextColumnError()
    needed = max(config.counts)
    for repeat in range(config.repeats):
        injection_rows(cohort, config, repeat, needed)

    logger.info(
        f"Injection sweep on '{config.target_context}': counts {config.counts}, "
        f"{config.repeats} repeats"
    )
    jobs = [(r, c) for r in range(config.repeats) for c in config.counts]
    workers = settings.n_jobs if n_jobs is None else n_jobs
    results = Parallel(n_jobs=workers)(
        delayed(_injection_task)(cohort, config, r, c) for r, c in jobs
    )

    by_count: dict[int, list[tuple[float, float]]] = defaultdict(list)
    for _, count, overall, in_context in results:
        by_count[count].append((overall, in_context))

    rows = []
    for count in config.counts:
        overall_mean, overall_std = aggregate_stats([v[0] for v in by_count[count]])
        context_mean, context_std = aggregate_stats([v[1] for v in by_count[count]])
        rows.append(
            InjectionRow(
                count=count,
                overall_accuracy=overall_mean,
                overall_accuracy_std=overall_std,
                context_accuracy=context_mean,
                context_accuracy_std=context_std,
            )
        )

    echo = config.model_dump(mode="json")
    return InjectionSweepReport(
        target_context=config.target_context,
        config=echo,
        rows=rows,
        provenance=provenance(config.seed, echo),
    )
