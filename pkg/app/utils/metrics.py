"""
Classification metrics.

Accuracy, macro F1 and one-vs-rest macro AUC-ROC, plus the small
aggregation helpers used to summarise per-user results.

Schemes: F1 is macro-averaged over every class in the class space (a class
never predicted and never present scores 0). AUC is one-vs-rest, averaged
over classes that have both positive and negative test rows, with tied
scores counted as one half.
"""

from collections.abc import Sequence

import numpy as np
from scipy.stats import rankdata
from sklearn.metrics import accuracy_score, f1_score

from app.core.exceptions import (
    EmptyInputError,
    LengthMismatchError,
    NoEligibleClassError,
)
from app.schemas.metrics import MetricsBundle

F1_SCHEME = "macro over all classes; zero-denominator precision/recall -> 0"
AUC_SCHEME = "one-vs-rest macro over classes with both positives and negatives; ties count 0.5"


def _check_pair(truth: Sequence[str], pred: Sequence[str]) -> None:
    if len(truth) != len(pred):
        raise LengthMismatchError(len(truth), len(pred))
    if len(truth) == 0:
        raise EmptyInputError("No predictions to score")


def accuracy(truth: Sequence[str], pred: Sequence[str]) -> float:
    """
    Fraction of predictions equal to the truth.

    Raises:
        LengthMismatchError: If the sequences differ in length
        EmptyInputError: If they are empty
    """
    _check_pair(truth, pred)
    return float(accuracy_score(list(truth), list(pred)))


def macro_f1(truth: Sequence[str], pred: Sequence[str], classes: Sequence[str]) -> float:
    """
    Unweighted mean of per-class F1 over ``classes``.

    Example:
        >>> round(macro_f1(["p", "p", "n", "n"], ["p", "n", "p", "n"], ["n", "u", "p"]), 4)
        0.3333
    """
    _check_pair(truth, pred)
    return float(
        f1_score(list(truth), list(pred), labels=list(classes), average="macro", zero_division=0)
    )


def binary_auc(is_positive: np.ndarray, scores: np.ndarray) -> float:
    """Mann-Whitney AUC of ``scores`` for a boolean positive mask (ties = 0.5)."""
    ranks = rankdata(scores, method="average")
    n_pos = int(is_positive.sum())
    n_neg = len(is_positive) - n_pos
    u_stat = float(ranks[is_positive].sum()) - n_pos * (n_pos + 1) / 2.0
    return u_stat / (n_pos * n_neg)


def auc_ovr_macro(
    truth: Sequence[str], proba: np.ndarray | Sequence[Sequence[float]], classes: Sequence[str]
) -> float:
    """
    One-vs-rest macro AUC over AUC-eligible classes.

    Args:
        truth: True class per row
        proba: Row-wise probability vectors, columns ordered as ``classes``
        classes: Class space

    Returns:
        Mean binary AUC over classes with both positive and negative rows

    Raises:
        NoEligibleClassError: If no class is eligible
    """
    scores = np.asarray(proba, dtype=float)
    if scores.ndim != 2 or scores.shape[0] != len(truth):
        raise LengthMismatchError(len(truth), scores.shape[0] if scores.ndim else 0)
    if len(truth) == 0:
        raise EmptyInputError("No predictions to score")
    truth_arr = np.asarray(truth)
    aucs = []
    for column, cls in enumerate(classes):
        is_positive = truth_arr == cls
        if 0 < is_positive.sum() < len(truth_arr):
            aucs.append(binary_auc(is_positive, scores[:, column]))
    if not aucs:
        raise NoEligibleClassError()
    return float(np.mean(aucs))


def aggregate_stats(values: Sequence[float]) -> tuple[float, float]:
    """
    Arithmetic mean and population (N-divisor) standard deviation.

    Raises:
        EmptyInputError: If ``values`` is empty
    """
    if len(values) == 0:
        raise EmptyInputError("Cannot aggregate an empty list")
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=0))


def confusion_counts(
    truth: Sequence[str], pred: Sequence[str], classes: Sequence[str]
) -> dict[str, dict[str, int]]:
    """Nested truth -> predicted -> count mapping over the class space."""
    _check_pair(truth, pred)
    table = {t: dict.fromkeys(classes, 0) for t in classes}
    for t, p in zip(truth, pred, strict=True):
        table[t][p] += 1
    return table


def accuracy_cdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Sorted values paired with their empirical cumulative fraction."""
    ordered = sorted(values)
    n = len(ordered)
    return [(v, (i + 1) / n) for i, v in enumerate(ordered)]


def evaluate(
    truth: Sequence[str], pred: Sequence[str], proba: np.ndarray, classes: Sequence[str]
) -> MetricsBundle:
    """Score one test set into a MetricsBundle."""
    try:
        auc: float | None = auc_ovr_macro(truth, proba, classes)
    except NoEligibleClassError:
        auc = None
    return MetricsBundle(
        accuracy=accuracy(truth, pred),
        macro_f1=macro_f1(truth, pred, classes),
        auc_ovr_macro=auc,
        support={c: int(sum(1 for t in truth if t == c)) for c in classes},
    )
