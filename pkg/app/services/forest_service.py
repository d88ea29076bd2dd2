"""
Forest service: a self-contained random forest classifier.

CART trees split numeric features at midpoints between consecutive
sorted unique values, choosing the split with the lowest weighted Gini
impurity over a random feature subset per node. Trees are stored as flat
node arrays, so prediction walks all rows through a tree at once.

Labels are integer class codes ``0..C-1`` indexing ``class_order``.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np
from sklearn.model_selection import StratifiedKFold

from app.core.exceptions import EmptyTrainingSetError, InsufficientRowsError, WidthMismatchError
from app.core.logging import get_logger
from app.core.rng import child_rng, derive_seed
from app.schemas.forest import ForestParams, GridSearchResult, GridSearchRow, HyperGrid
from app.utils.metrics import accuracy

logger = get_logger(__name__)

LEAF = -1


class Classifier(Protocol):
    """Anything the protocols can train and evaluate."""

    class_order: tuple[str, ...]

    def predict(self, rows: np.ndarray) -> np.ndarray: ...

    def predict_proba(self, rows: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class TreeNode:
    """One node of a fitted tree; ``feature`` is ``None`` for a leaf."""

    feature: int | None
    threshold: float | None
    left: int | None
    right: int | None
    counts: tuple[float, ...]

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _gini(counts: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(totals > 0, counts / np.maximum(totals, 1), 0.0)
    return 1.0 - (p**2).sum(axis=-1)


def _best_split_on(
    column: np.ndarray, labels: np.ndarray, n_classes: int
) -> tuple[float, float] | None:
    """Lowest weighted child impurity (summed counts x gini) and its threshold."""
    order = np.argsort(column, kind="stable")
    xs = column[order]
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    onehot = np.zeros((len(xs), n_classes))
    onehot[np.arange(len(xs)), labels[order]] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    right = left[-1] + onehot[-1] - left
    n_left = np.arange(1, len(xs))
    n_right = len(xs) - n_left
    cost = n_left * _gini(left) + n_right * _gini(right)
    cost = np.where(valid, cost, np.inf)
    i = int(np.argmin(cost))
    threshold = (xs[i] + xs[i + 1]) / 2.0
    if threshold >= xs[i + 1]:
        threshold = xs[i]
    return float(cost[i]), float(threshold)


class DecisionTree:
    """A single Gini CART tree in flat-array form."""

    def __init__(
        self,
        n_classes: int,
        max_depth: int | None = None,
        min_samples_split: int = 2,
        features_per_split: int | None = None,
    ):
        self.n_classes = n_classes
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.features_per_split = features_per_split
        self.feature = np.empty(0, dtype=int)
        self.threshold = np.empty(0)
        self.left = np.empty(0, dtype=int)
        self.right = np.empty(0, dtype=int)
        self.counts = np.empty((0, n_classes))
        self.importances = np.empty(0)

    def fit(self, rows: np.ndarray, labels: np.ndarray, rng: np.random.Generator) -> "DecisionTree":
        """
        Grow the tree depth-first with an explicit stack.

        Each node draws a random permutation of the features and scans the
        first ``features_per_split`` of them; the remaining ones are tried
        only when none of the drawn features can split the node.
        """
        n_rows, n_features = rows.shape
        m = min(self.features_per_split or math.ceil(math.sqrt(n_features)), n_features)
        feature, threshold, left, right, counts = [], [], [], [], []
        importances = np.zeros(n_features)

        def new_node(idx: np.ndarray) -> int:
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            counts.append(np.bincount(labels[idx], minlength=self.n_classes).astype(float))
            return len(feature) - 1

        stack = [(new_node(np.arange(n_rows)), np.arange(n_rows), 0)]
        while stack:
            node, idx, depth = stack.pop()
            node_counts = counts[node]
            if (
                len(idx) < self.min_samples_split
                or (self.max_depth is not None and depth >= self.max_depth)
                or np.count_nonzero(node_counts) <= 1
            ):
                continue

            best: tuple[float, int, float] | None = None
            order = rng.permutation(n_features)
            for k, f in enumerate(order):
                if k >= m and best is not None:
                    break
                found = _best_split_on(rows[idx, f], labels[idx], self.n_classes)
                if found is not None and (best is None or found[0] < best[0]):
                    best = (found[0], int(f), found[1])
            if best is None:
                continue

            cost, f, th = best
            go_left = rows[idx, f] <= th
            parent = len(idx) * float(_gini(node_counts))
            importances[f] += (parent - cost) / n_rows

            feature[node] = f
            threshold[node] = th
            left_idx, right_idx = idx[go_left], idx[~go_left]
            left[node] = new_node(left_idx)
            right[node] = new_node(right_idx)
            stack.append((right[node], right_idx, depth + 1))
            stack.append((left[node], left_idx, depth + 1))

        self.feature = np.array(feature, dtype=int)
        self.threshold = np.array(threshold, dtype=float)
        self.left = np.array(left, dtype=int)
        self.right = np.array(right, dtype=int)
        self.counts = np.vstack(counts)
        self.importances = np.maximum(importances, 0.0)
        return self

    def apply(self, rows: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        node = np.zeros(len(rows), dtype=int)
        active = self.feature[node] != LEAF
        while active.any():
            at = node[active]
            go_left = rows[active, self.feature[at]] <= self.threshold[at]
            node[active] = np.where(go_left, self.left[at], self.right[at])
            active = self.feature[node] != LEAF
        return node

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        leaf_counts = self.counts[self.apply(rows)]
        return leaf_counts / leaf_counts.sum(axis=1, keepdims=True)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def nodes(self) -> list[TreeNode]:
        return [
            TreeNode(
                feature=None if self.feature[i] == LEAF else int(self.feature[i]),
                threshold=None if self.feature[i] == LEAF else float(self.threshold[i]),
                left=None if self.feature[i] == LEAF else int(self.left[i]),
                right=None if self.feature[i] == LEAF else int(self.right[i]),
                counts=tuple(float(c) for c in self.counts[i]),
            )
            for i in range(self.n_nodes)
        ]


@dataclass
class RandomForestModel:
    """A fitted forest; immutable after :func:`fit_forest` returns."""

    params: ForestParams
    class_order: tuple[str, ...]
    feature_names: tuple[str, ...]
    trees: list[DecisionTree] = field(default_factory=list)
    feature_importances: np.ndarray = field(default_factory=lambda: np.empty(0))

    def _check_width(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.feature_names):
            raise WidthMismatchError(len(self.feature_names), rows.shape[-1])
        return rows

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        """
        Mean over trees of the reached leaf's class distribution.

        Raises:
            WidthMismatchError: If the rows do not have one value per feature
        """
        rows = self._check_width(rows)
        total = np.zeros((len(rows), len(self.class_order)))
        for tree in self.trees:
            total += tree.predict_proba(rows)
        return total / len(self.trees)

    def predict(self, rows: np.ndarray) -> np.ndarray:
        """Class code per row; ties go to the earlier class in ``class_order``."""
        return np.argmax(self.predict_proba(rows), axis=1)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready dump of params, importances and tree structures."""
        return {
            "params": self.params.model_dump(),
            "class_order": list(self.class_order),
            "feature_names": list(self.feature_names),
            "feature_importances": [float(v) for v in self.feature_importances],
            "trees": [
                {
                    "feature": tree.feature.tolist(),
                    "threshold": [float(v) for v in tree.threshold],
                    "left": tree.left.tolist(),
                    "right": tree.right.tolist(),
                    "counts": tree.counts.tolist(),
                }
                for tree in self.trees
            ],
        }


def fit_forest(
    rows: np.ndarray,
    labels: np.ndarray,
    params: ForestParams,
    class_order: Sequence[str],
    feature_names: Sequence[str] | None = None,
) -> RandomForestModel:
    """
    Fit a random forest.

    Tree ``t`` draws its bootstrap sample and feature subsets from a stream
    derived from ``(params.seed, t)``, so trees are independent of each
    other and of fitting order.

    Args:
        rows: Training rows without missing values
        labels: Class codes
        params: Forest hyperparameters
        class_order: Class names indexed by code
        feature_names: Column names (defaults to ``f0..``)

    Raises:
        EmptyTrainingSetError: If there are no rows
    """
    rows = np.asarray(rows, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise EmptyTrainingSetError()
    names = tuple(feature_names) if feature_names is not None else tuple(
        f"f{j}" for j in range(rows.shape[1])
    )
    if len(names) != rows.shape[1]:
        raise WidthMismatchError(len(names), rows.shape[1])

    n = len(rows)
    model = RandomForestModel(params=params, class_order=tuple(class_order), feature_names=names)
    importances = np.zeros(rows.shape[1])
    for t in range(params.n_trees):
        rng = child_rng(params.seed, t)
        sample = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        tree = DecisionTree(
            n_classes=len(class_order),
            max_depth=params.max_depth,
            min_samples_split=params.min_samples_split,
            features_per_split=params.features_per_split,
        ).fit(rows[sample], labels[sample], rng)
        importances += tree.importances
        model.trees.append(tree)

    total = importances.sum()
    model.feature_importances = importances / total if total > 0 else importances
    return model


def rank_importances(
    values: np.ndarray, names: Sequence[str], k: int | None = None
) -> list[tuple[str, float]]:
    """Pair importances with names, sorted descending (ties keep feature order)."""
    order = np.argsort(-np.asarray(values), kind="stable")
    ranked = [(names[j], float(values[j])) for j in order]
    return ranked if k is None else ranked[:k]


def gini_importance(model: RandomForestModel) -> list[tuple[str, float]]:
    return rank_importances(model.feature_importances, model.feature_names)


def top_features(model: RandomForestModel, k: int = 20) -> list[tuple[str, float]]:
    return rank_importances(model.feature_importances, model.feature_names, k)


@dataclass
class MajorityClassifier:
    """Predicts the modal training class with a one-hot probability."""

    class_order: tuple[str, ...]
    modal: int = 0

    @classmethod
    def fit(cls, labels: np.ndarray, class_order: Sequence[str]) -> "MajorityClassifier":
        """
        Raises:
            EmptyTrainingSetError: If there are no labels
        """
        labels = np.asarray(labels, dtype=int)
        if len(labels) == 0:
            raise EmptyTrainingSetError()
        counts = np.bincount(labels, minlength=len(class_order))
        return cls(class_order=tuple(class_order), modal=int(np.argmax(counts)))

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        proba = np.zeros((len(rows), len(self.class_order)))
        proba[:, self.modal] = 1.0
        return proba

    def predict(self, rows: np.ndarray) -> np.ndarray:
        return np.full(len(rows), self.modal, dtype=int)


def grid_search(
    rows: np.ndarray,
    labels: np.ndarray,
    grid: HyperGrid,
    seed: int,
    class_order: Sequence[str],
    base: ForestParams | None = None,
) -> GridSearchResult:
    """
    Exhaustive k-fold cross-validated search over ``grid``.

    Folds are stratified and shared by every candidate; fold ``k`` fits
    with the same forest seed for every candidate. The winner is the
    highest mean accuracy, ties going to the earliest candidate.

    Raises:
        InsufficientRowsError: If a training class has fewer rows than folds
    """
    rows = np.asarray(rows, dtype=float)
    labels = np.asarray(labels, dtype=int)
    base = base or ForestParams()
    present, counts = np.unique(labels, return_counts=True)
    if len(labels) == 0 or counts.min() < grid.folds:
        raise InsufficientRowsError(
            f"Grid search needs at least {grid.folds} rows per class",
            details={
                "folds": grid.folds,
                "class_counts": {
                    class_order[c]: int(n) for c, n in zip(present, counts, strict=True)
                },
            },
        )

    folds = list(
        StratifiedKFold(n_splits=grid.folds, shuffle=True, random_state=seed % 2**32).split(
            rows, labels
        )
    )
    table: list[GridSearchRow] = []
    best_index, best_score = 0, -np.inf
    for ci, candidate in enumerate(grid.candidates()):
        scores = []
        for k, (train, test) in enumerate(folds):
            params = base.model_copy(update={**candidate, "seed": derive_seed(seed, "cv", k)})
            model = fit_forest(rows[train], labels[train], params, class_order)
            scores.append(accuracy(labels[test], model.predict(rows[test])))
        mean = float(np.mean(scores))
        table.append(GridSearchRow(params=candidate, fold_scores=scores, mean_score=mean))
        if mean > best_score:
            best_index, best_score = ci, mean

    best = base.model_copy(update={**grid.candidates()[best_index], "seed": seed})
    logger.debug(f"Grid search picked {grid.candidates()[best_index]} (cv {best_score:.4f})")
    return GridSearchResult(best_params=best, table=table)
