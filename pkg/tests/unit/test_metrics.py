"""Unit tests for classification metrics."""

import numpy as np
import pytest

from app.core.exceptions import EmptyInputError, LengthMismatchError, NoEligibleClassError
from app.utils.metrics import (
    accuracy,
    accuracy_cdf,
    aggregate_stats,
    auc_ovr_macro,
    confusion_counts,
    evaluate,
    macro_f1,
)

CLASSES = ["negative", "neutral", "positive"]


def pairwise_auc(is_positive: np.ndarray, scores: np.ndarray) -> float:
    """O(n^2) oracle: fraction of positive/negative pairs ranked correctly, ties 0.5."""
    pos, neg = scores[is_positive], scores[~is_positive]
    wins = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


class TestAccuracy:
    """Tests for accuracy function."""

    def test_value(self):
        """Test the fraction of exact matches."""
        assert accuracy(["a", "b", "c", "a"], ["a", "b", "a", "a"]) == 0.75

    def test_length_mismatch(self):
        """Test unequal lengths raise LengthMismatchError."""
        with pytest.raises(LengthMismatchError):
            accuracy(["a"], ["a", "b"])

    def test_empty(self):
        """Test empty input raises EmptyInputError."""
        with pytest.raises(EmptyInputError):
            accuracy([], [])


class TestMacroF1:
    """Tests for macro_f1 function."""

    def test_hand_computed(self):
        """Test macro F1 on a fixture worked out by hand."""
        truth = ["negative", "negative", "neutral", "positive", "positive", "positive"]
        pred = ["negative", "neutral", "neutral", "positive", "positive", "negative"]
        # negative: p=1/2 r=1/2 -> 0.5; neutral: p=1/2 r=1 -> 2/3; positive: p=1 r=2/3 -> 0.8
        assert macro_f1(truth, pred, CLASSES) == pytest.approx((0.5 + 2 / 3 + 0.8) / 3)

    def test_absent_class_scores_zero(self):
        """Test a class never present nor predicted contributes 0."""
        assert macro_f1(["negative"], ["negative"], CLASSES) == pytest.approx(1 / 3)


class TestAucOvrMacro:
    """Tests for auc_ovr_macro function."""

    def test_perfect(self):
        """Test perfectly ranked scores give AUC 1."""
        truth = ["negative", "neutral", "positive"]
        assert auc_ovr_macro(truth, np.eye(3), CLASSES) == 1.0

    def test_matches_pairwise_oracle(self):
        """Test the rank formula matches the pairwise oracle on random fixtures."""
        rng = np.random.default_rng(0)
        for _ in range(20):
            truth = np.array(CLASSES)[rng.integers(0, 3, 50)]
            # Coarse scores so ties occur.
            proba = np.round(rng.dirichlet(np.ones(3), 50), 1)
            expected = [
                pairwise_auc(truth == c, proba[:, k])
                for k, c in enumerate(CLASSES)
                if 0 < (truth == c).sum() < len(truth)
            ]
            assert auc_ovr_macro(list(truth), proba, CLASSES) == pytest.approx(
                float(np.mean(expected)), abs=1e-12
            )

    def test_skips_ineligible_classes(self):
        """Test classes without both positives and negatives are left out."""
        truth = ["negative", "negative", "positive"]
        proba = np.array([[0.9, 0.0, 0.1], [0.8, 0.0, 0.2], [0.1, 0.0, 0.9]])
        assert auc_ovr_macro(truth, proba, CLASSES) == 1.0

    def test_single_class_truth(self):
        """Test a one-class test set raises NoEligibleClassError."""
        with pytest.raises(NoEligibleClassError):
            auc_ovr_macro(["neutral", "neutral"], np.full((2, 3), 1 / 3), CLASSES)


class TestAggregateStats:
    """Tests for aggregate_stats function."""

    def test_population_std(self):
        """Test the std uses the N divisor."""
        assert aggregate_stats([1.0, 3.0]) == (2.0, 1.0)

    def test_empty(self):
        """Test an empty list raises EmptyInputError."""
        with pytest.raises(EmptyInputError):
            aggregate_stats([])


class TestConfusionAndCdf:
    """Tests for confusion_counts and accuracy_cdf."""

    def test_confusion(self):
        """Test truth x predicted counts over the full class space."""
        table = confusion_counts(["negative", "positive"], ["positive", "positive"], CLASSES)
        assert table["negative"] == {"negative": 0, "neutral": 0, "positive": 1}
        assert table["positive"]["positive"] == 1
        assert sum(sum(row.values()) for row in table.values()) == 2

    def test_cdf(self):
        """Test sorted values with cumulative fractions."""
        assert accuracy_cdf([0.5, 0.25, 1.0, 0.75]) == [
            (0.25, 0.25),
            (0.5, 0.5),
            (0.75, 0.75),
            (1.0, 1.0),
        ]


class TestEvaluate:
    """Tests for evaluate function."""

    def test_bundle(self):
        """Test evaluate fills every metric and the per-class support."""
        truth = ["negative", "positive", "positive"]
        pred = ["negative", "positive", "negative"]
        proba = np.array([[0.8, 0.1, 0.1], [0.2, 0.1, 0.7], [0.6, 0.0, 0.4]])
        bundle = evaluate(truth, pred, proba, CLASSES)
        assert bundle.accuracy == pytest.approx(2 / 3)
        assert bundle.auc_ovr_macro == 1.0
        assert bundle.support == {"negative": 1, "neutral": 0, "positive": 2}

    def test_auc_none_when_ineligible(self):
        """Test AUC is None when the test set has one class."""
        bundle = evaluate(["neutral"], ["neutral"], np.array([[0.0, 1.0, 0.0]]), CLASSES)
        assert bundle.auc_ovr_macro is None
        assert bundle.accuracy == 1.0
