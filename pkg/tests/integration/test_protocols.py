"""
Integration tests for protocol runs and context analyses.

Runs every protocol end to end on small cohorts. Forest-based runs use
tiny forests; the heavier acceptance checks are marked slow.
"""

import numpy as np
import pytest

from app.core.exceptions import (
    ConfigValidationError,
    InsufficientContextReportsError,
    InsufficientDataError,
    MissingContextColumnError,
)
from app.schemas.community import (
    FixedPolicy,
    MaxAvgPolicy,
    PerUserMaxPolicy,
    SelectionMode,
    ThresholdGrid,
)
from app.schemas.forest import ForestParams, HyperGrid
from app.schemas.protocol import (
    ClassifierConfig,
    ClassifierKind,
    InjectionConfig,
    PredictionRecord,
    ProtocolConfig,
    UserStatus,
)
from app.schemas.sampling import SplitSpec
from app.schemas.synth import GeneratorConfig
from app.services.community_service import detect_community
from app.services.protocol_service import (
    CLASSIFIER_BUILDERS,
    ProtocolRunner,
    context_breakdown,
    injection_rows,
    injection_sweep,
    register_classifier,
    run_hm,
    run_plm,
    run_ulm,
)
from app.services.synth_service import generate_cohort
from app.utils.file_helpers import canonical_json

MAJORITY = ClassifierConfig(kind=ClassifierKind.MAJORITY)
GRID = ThresholdGrid(values=[0.5, 0.9, 0.97])


def user(report, user_id):
    return next(u for u in report.users if u.user_id == user_id)


class TestPopulationProtocols:
    """Integration tests for PLM and HM."""

    def test_plm_every_user(self, synthetic, protocol_config):
        """Test PLM evaluates every user with one bundle per repeat."""
        report = run_plm(synthetic.cohort, protocol_config("PLM"), n_jobs=1)
        assert report.n_users_ok == len(synthetic.cohort.users)
        assert all(len(u.repeats) == 2 for u in report.users)
        assert report.feature_importance_top
        assert sum(sum(row.values()) for row in report.confusion.values()) == sum(
            sum(b.support.values()) for u in report.users for b in u.repeats
        )

    def test_aggregate_is_mean_of_user_means(self, synthetic, protocol_config):
        """Test the cohort accuracy is the mean of per-user means."""
        report = run_hm(synthetic.cohort, protocol_config("HM", classifier=MAJORITY), n_jobs=1)
        means = [u.summary["accuracy"].mean for u in report.users]
        assert report.aggregate["accuracy"].mean == pytest.approx(np.mean(means))
        assert report.aggregate["accuracy"].std_across_users == pytest.approx(np.std(means))

    def test_protocol_mismatch(self, synthetic, protocol_config):
        """Test calling a runner with another protocol's config is rejected."""
        with pytest.raises(ConfigValidationError):
            run_plm(synthetic.cohort, protocol_config("HM"), n_jobs=1)

    def test_needs_two_users(self, make_cohort, protocol_config):
        """Test PLM on a single-user cohort raises InsufficientDataError."""
        cohort = make_cohort(["a"] * 4, ["negative", "neutral", "positive", "positive"],
                             np.arange(4.0).reshape(4, 1))
        with pytest.raises(InsufficientDataError):
            run_plm(cohort, protocol_config("PLM"), n_jobs=1)

    def test_grid_classifier(self, tiny_cohort, protocol_config):
        """Test grid-searched forests train for every user, falling back when folds are short."""
        classifier = ClassifierConfig(
            kind=ClassifierKind.GRID,
            forest=ForestParams(n_trees=3),
            grid=HyperGrid(n_trees=[2], max_depth=[None], min_samples_split=[2], folds=5),
        )
        report = run_hm(tiny_cohort, protocol_config("HM", classifier=classifier), n_jobs=1)
        assert report.n_users_ok == 4


class AlwaysFirstClass:
    """Classifier predicting the first class for every row."""

    def __init__(self, class_order):
        self.class_order = tuple(class_order)

    def predict(self, rows):
        return np.zeros(len(rows), dtype=int)

    def predict_proba(self, rows):
        proba = np.zeros((len(rows), len(self.class_order)))
        proba[:, 0] = 1.0
        return proba


class TestClassifierRegistry:
    """Integration tests for classifier dispatch through the registry."""

    def test_every_kind_registered(self):
        """Test each classifier kind has a builder."""
        assert set(CLASSIFIER_BUILDERS) == set(ClassifierKind)

    def test_registered_builder_is_used(self, synthetic, protocol_config, mocker):
        """Test a builder registered for a kind trains every task of that kind."""
        mocker.patch.dict(CLASSIFIER_BUILDERS)
        calls = []

        @register_classifier(ClassifierKind.MAJORITY)
        def always_first(config, rows, labels, class_order, feature_names, seed):
            calls.append(seed)
            return AlwaysFirstClass(class_order)

        config = protocol_config("PLM", classifier=MAJORITY, keep_predictions=True)
        report = run_plm(synthetic.cohort, config, n_jobs=1)
        assert len(calls) == len(synthetic.cohort.users) * 2
        assert {p.pred for p in report.predictions} == {synthetic.cohort.class_order[0]}

    def test_unregistered_kind(self, tiny_cohort, protocol_config, mocker):
        """Test a kind without a builder fails the run with ConfigValidationError."""
        mocker.patch.dict(CLASSIFIER_BUILDERS, clear=True)
        with pytest.raises(ConfigValidationError):
            run_plm(tiny_cohort, protocol_config("PLM", classifier=MAJORITY), n_jobs=1)


class TestUserLevelProtocol:
    """Integration tests for ULM."""

    def test_class_absent_user_skipped(self, tiny_cohort, protocol_config):
        """Test a user lacking a class is skipped with its reason, others run."""
        report = run_ulm(tiny_cohort, protocol_config("ULM", classifier=MAJORITY), n_jobs=1)
        skipped = user(report, "u4")
        assert skipped.status == UserStatus.SKIPPED
        assert skipped.reason == "class absent"
        assert report.n_users_ok == 3
        assert report.eligibility["users_by_class_presence"]["3"] == 3

    def test_min_per_class(self, tiny_cohort, protocol_config):
        """Test users below the per-class minimum are skipped."""
        config = protocol_config("ULM", classifier=MAJORITY, ulm_min_per_class=3)
        report = run_ulm(tiny_cohort, config, n_jobs=1)
        assert report.n_users_ok == 0
        assert user(report, "u1").reason == "fewer than 3 reports in a class"

    def test_thirty_reports_with_every_class_run(self, make_cohort, protocol_config):
        """Test users with 30 reports and six or more per class finish all five repeats."""
        rng = np.random.default_rng(4)
        classes = ["negative"] * 6 + ["neutral"] * 10 + ["positive"] * 14
        users = ["a"] * 30 + ["b"] * 30
        cohort = make_cohort(users, classes * 2, rng.normal(size=(60, 3)))
        config = protocol_config("ULM", split=SplitSpec(repeats=5))
        report = run_ulm(cohort, config, n_jobs=1)
        assert report.n_users_ok == 2
        for user_id in ("a", "b"):
            assert user(report, user_id).status == UserStatus.OK
            assert len(user(report, user_id).repeats) == 5


class TestCommunityProtocol:
    """Integration tests for CBM threshold policies."""

    def test_fixed_empty_community(self, synthetic, protocol_config):
        """Test threshold 1 empties every community and skips every user."""
        config = protocol_config("CBM", threshold_policy=FixedPolicy(threshold=1.0))
        report = ProtocolRunner(synthetic.cohort, config, n_jobs=1).run()
        assert report.n_users_ok == 0
        assert all(u.reason == "empty community at threshold 1" for u in report.users)
        assert report.aggregate["accuracy"].mean is None

    def test_fixed_threshold_rows(self, synthetic, protocol_config):
        """Test a fixed run reports its threshold and community size per user."""
        config = protocol_config(
            "CBM", classifier=MAJORITY, threshold_policy=FixedPolicy(threshold=0.9)
        )
        runner = ProtocolRunner(synthetic.cohort, config, n_jobs=1)
        report = runner.run()
        for result in report.users:
            if result.status == UserStatus.OK:
                assert result.threshold == 0.9
                assert result.community_size > 0
        assert len(report.threshold_summary) == 1

    @pytest.mark.slow
    def test_per_user_max_equals_grid_argmax(self, synthetic, protocol_config):
        """Test PerUserMax picks exactly the best of the per-threshold fixed runs."""
        cohort = synthetic.cohort
        fixed = {}
        for th in GRID.values:
            config = protocol_config("CBM", threshold_policy=FixedPolicy(threshold=th))
            fixed[th] = {u.user_id: u for u in ProtocolRunner(cohort, config, n_jobs=1).run().users}

        config = protocol_config("CBM", threshold_policy=PerUserMaxPolicy(grid=GRID))
        report = ProtocolRunner(cohort, config, n_jobs=1).run()
        for result in report.users:
            scores = {
                th: fixed[th][result.user_id].summary["accuracy"].mean
                for th in GRID.values
                if fixed[th][result.user_id].status == UserStatus.OK
            }
            if not scores:
                assert result.status == UserStatus.SKIPPED
                continue
            top = max(scores.values())
            best = max(th for th, acc in scores.items() if acc == top)
            assert result.threshold == best
            assert result.summary["accuracy"].mean == top
        assert report.selection_optimistic
        assert report.threshold_summary[-1].label.startswith("MAX (")
        assert len(report.threshold_summary) == len(GRID.values) + 1

    def test_validation_selection(self, synthetic, protocol_config):
        """Test validation-mode selection refits and is not flagged optimistic."""
        policy = PerUserMaxPolicy(grid=GRID, selection=SelectionMode.VALIDATION)
        config = protocol_config("CBM", classifier=MAJORITY, threshold_policy=policy)
        report = ProtocolRunner(synthetic.cohort, config, n_jobs=1).run()
        assert not report.selection_optimistic
        assert report.n_users_ok > 0
        assert all(u.threshold in GRID.values for u in report.users if u.threshold is not None)

    def test_max_avg_given_value(self, synthetic, protocol_config):
        """Test MaxAvg with a precomputed value runs every user at it."""
        policy = MaxAvgPolicy(value=0.5)
        config = protocol_config("CBM", classifier=MAJORITY, threshold_policy=policy)
        report = ProtocolRunner(synthetic.cohort, config, n_jobs=1).run()
        assert {u.threshold for u in report.users} == {0.5}
        assert report.threshold_summary[-1].label.startswith("MAX-AVG")

    def test_max_avg_leave_one_out(self, synthetic, protocol_config):
        """Test each user's MaxAvg threshold is the mean of the others' best thresholds."""
        policy = MaxAvgPolicy(grid=GRID)
        config = protocol_config("CBM", classifier=MAJORITY, threshold_policy=policy)
        runner = ProtocolRunner(synthetic.cohort, config, n_jobs=1)
        best, _ = runner.best_thresholds(runner.sweep(GRID), synthetic.cohort.users, GRID)
        report = runner.run()
        for result in report.users:
            others = [th for u, th in best.items() if u != result.user_id]
            if result.status == UserStatus.OK:
                assert result.threshold == pytest.approx(np.mean(others))

    def test_sweep_shares_tasks_across_equal_communities(
        self, synthetic, protocol_config, mocker
    ):
        """Test thresholds giving the same members are evaluated once and fanned out."""
        grid = ThresholdGrid(values=[0.0, 0.1, 0.2])
        config = protocol_config("CBM", threshold_policy=PerUserMaxPolicy(grid=grid))
        runner = ProtocolRunner(synthetic.cohort, config, n_jobs=1)
        spy = mocker.spy(runner, "_map")
        cells = runner.sweep(grid)

        users = synthetic.cohort.users
        distinct = {
            (u, detect_community(runner.similarity, u, th).members)
            for u in users
            for th in grid.values
        }
        assert len(spy.call_args.args[1]) == len(distinct) * config.split.repeats
        for u in users:
            first = [o.metrics and o.metrics.accuracy for o in cells[(u, 0.0)]]
            for th in grid.values:
                community = detect_community(runner.similarity, u, th)
                outcomes = cells[(u, th)]
                assert [o.repeat for o in outcomes] == [0, 1]
                assert {o.threshold for o in outcomes} == {th}
                assert {o.community_size for o in outcomes} == {community.size}
                if community.members == detect_community(runner.similarity, u, 0.0).members:
                    assert [o.metrics and o.metrics.accuracy for o in outcomes] == first


class TestDeterminism:
    """Integration tests for reproducible reports."""

    def test_identical_reruns_any_thread_count(self, synthetic, protocol_config):
        """Test reports are byte-identical across reruns and worker counts."""
        config = protocol_config("CBM", threshold_policy=PerUserMaxPolicy(grid=GRID))
        first = canonical_json(ProtocolRunner(synthetic.cohort, config, n_jobs=1).run())
        second = canonical_json(ProtocolRunner(synthetic.cohort, config, n_jobs=2).run())
        assert first == second

    def test_seed_changes_report(self, synthetic, protocol_config):
        """Test a different master seed changes the splits."""
        a = run_plm(synthetic.cohort, protocol_config("PLM", seed=1), n_jobs=1)
        b = run_plm(synthetic.cohort, protocol_config("PLM", seed=2), n_jobs=1)
        assert canonical_json(a) != canonical_json(b)


class TestContextBreakdown:
    """Integration tests for context_breakdown."""

    def test_overall_is_weighted_mean(self, synthetic, protocol_config):
        """Test the overall accuracy equals the support-weighted context mean."""
        config = protocol_config("PLM", keep_predictions=True)
        breakdown = context_breakdown(run_plm(synthetic.cohort, config, n_jobs=1))
        overall, *groups = breakdown.rows
        assert overall.group == "overall"
        assert overall.support == sum(g.support for g in groups)
        weighted = sum(g.accuracy * g.support for g in groups) / overall.support
        assert overall.accuracy == pytest.approx(weighted, abs=1e-12)
        assert [g.group for g in groups] == sorted(g.group for g in groups)

    def test_requires_predictions(self, synthetic, protocol_config):
        """Test a report without stored predictions is rejected."""
        report = run_plm(synthetic.cohort, protocol_config("PLM", classifier=MAJORITY), n_jobs=1)
        with pytest.raises(ConfigValidationError):
            context_breakdown(report)

    def test_untagged_group(self):
        """Test untagged predictions are grouped as none."""
        records = [
            PredictionRecord(report_id="1", user_id="a", repeat=0, context="eating",
                             truth="neutral", pred="neutral"),
            PredictionRecord(report_id="2", user_id="a", repeat=0, context=None,
                             truth="neutral", pred="positive"),
        ]
        rows = context_breakdown(records).rows
        assert [(r.group, r.support, r.accuracy) for r in rows] == [
            ("overall", 2, 0.5),
            ("eating", 1, 1.0),
            ("none", 1, 0.0),
        ]

    def test_no_contexts(self):
        """Test predictions without any context raise MissingContextColumnError."""
        records = [
            PredictionRecord(report_id="1", user_id="a", repeat=0, context=None,
                             truth="neutral", pred="neutral")
        ]
        with pytest.raises(MissingContextColumnError):
            context_breakdown(records)


class TestInjectionSweep:
    """Integration tests for the context-injection sweep."""

    def test_zero_count_excludes_context(self, synthetic):
        """Test c=0 trains on no target-context report and counts nest."""
        cohort = synthetic.cohort
        config = InjectionConfig(counts=[0, 5, 10], repeats=2, seed=1)
        train0, test0 = injection_rows(cohort, config, 0, 0)
        assert not any(cohort.contexts[p] == "eating" for p in train0)
        train5, test5 = injection_rows(cohort, config, 0, 5)
        train10, _ = injection_rows(cohort, config, 0, 10)
        assert set(train0) < set(train5) < set(train10)
        assert sum(cohort.contexts[p] == "eating" for p in train10) == 10
        np.testing.assert_array_equal(test0, test5)
        assert not set(train10) & set(test0)

    def test_too_many_reports(self, synthetic):
        """Test asking for more context reports than exist raises an error."""
        config = InjectionConfig(counts=[0, 100000], repeats=1)
        with pytest.raises(InsufficientContextReportsError):
            injection_sweep(synthetic.cohort, config, n_jobs=1)

    def test_requires_contexts(self, make_cohort):
        """Test a cohort without context tags raises MissingContextColumnError."""
        cohort = make_cohort(["a", "a", "b", "b"], ["negative", "positive"] * 2, np.eye(4))
        with pytest.raises(MissingContextColumnError):
            injection_sweep(cohort, InjectionConfig(counts=[0]), n_jobs=1)

    def test_rows(self, synthetic):
        """Test one row per count with accuracies in range."""
        config = InjectionConfig(
            counts=[0, 10],
            repeats=2,
            classifier=ClassifierConfig(forest=ForestParams(n_trees=3)),
        )
        report = injection_sweep(synthetic.cohort, config, n_jobs=1)
        assert [row.count for row in report.rows] == [0, 10]
        for row in report.rows:
            assert 0.0 <= row.context_accuracy <= 1.0
            assert row.overall_accuracy_std >= 0.0

    @pytest.mark.slow
    def test_injection_helps_shifted_context(self):
        """Test adding shifted-context reports raises target-context accuracy."""
        gains = []
        for seed in range(5):
            cohort = generate_cohort(
                GeneratorConfig(n_users=20, n_features=8, context_shift=3.0, seed=seed)
            ).cohort
            config = InjectionConfig(
                counts=[0, 100],
                repeats=2,
                seed=seed,
                classifier=ClassifierConfig(forest=ForestParams(n_trees=15)),
            )
            rows = injection_sweep(cohort, config, n_jobs=1).rows
            gains.append(rows[1].context_accuracy - rows[0].context_accuracy)
        assert np.mean(gains) > 0.0


@pytest.mark.slow
class TestPersonalizationOrdering:
    """Integration test for the population vs hybrid vs community ordering."""

    def test_default_cohort_ordering(self):
        """Test PLM < HM < CBM on the default cohort, CBM leading PLM by at least 0.10."""
        means: dict[str, list[float]] = {"PLM": [], "HM": [], "CBM": []}
        for seed in range(5):
            cohort = generate_cohort(GeneratorConfig(seed=seed)).cohort
            base = {
                "split": SplitSpec(repeats=2, seed=seed),
                "classifier": ClassifierConfig(forest=ForestParams(n_trees=10, max_depth=10)),
                "seed": seed,
            }
            for protocol in ("PLM", "HM"):
                config = ProtocolConfig(protocol=protocol, **base)
                report = ProtocolRunner(cohort, config, n_jobs=-1).run()
                means[protocol].append(report.aggregate["accuracy"].mean)
            config = ProtocolConfig(protocol="CBM", threshold_policy=PerUserMaxPolicy(), **base)
            report = ProtocolRunner(cohort, config, n_jobs=-1).run()
            means["CBM"].append(report.aggregate["accuracy"].mean)

        plm, hm, cbm = (float(np.mean(means[p])) for p in ("PLM", "HM", "CBM"))
        assert plm < hm < cbm
        assert cbm >= plm + 0.10
