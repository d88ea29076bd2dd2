"""
Sampling service for protocol splits and oversampling.

Builds the seeded train/test splits of the four protocols, imputes
missing values from training statistics and balances training sets with
synthetic minority oversampling. Test rows never pass through SMOTE.
"""

import math

import numpy as np
from sklearn.neighbors import NearestNeighbors

from app.core.exceptions import (
    ConfigValidationError,
    EmptyCommunityError,
    InsufficientDataError,
    LeakageError,
)
from app.core.logging import get_logger
from app.core.rng import child_rng
from app.domain.cohort import Cohort
from app.domain.community import Community, Split
from app.schemas.sampling import Protocol, SmoteConfig, SplitSpec

logger = get_logger(__name__)

_EPS = 1e-9


def _floor_count(fraction: float, n: int) -> int:
    return int(math.floor(fraction * n + _EPS))


def _allocate(n_train: int, class_sizes: list[int]) -> list[int]:
    """Split ``n_train`` across classes proportionally (largest remainder), keeping
    at least one row of every class on each side."""
    n = sum(class_sizes)
    quotas = [n_train * size / n for size in class_sizes]
    alloc = [
        min(max(int(math.floor(q)), 1), size - 1)
        for q, size in zip(quotas, class_sizes, strict=True)
    ]
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - math.floor(quotas[i])), i))
    remaining = n_train - sum(alloc)
    while remaining != 0:
        moved = False
        for i in order if remaining > 0 else reversed(order):
            if remaining > 0 and alloc[i] < class_sizes[i] - 1:
                alloc[i] += 1
                remaining -= 1
                moved = True
            elif remaining < 0 and alloc[i] > 1:
                alloc[i] -= 1
                remaining += 1
                moved = True
            if remaining == 0:
                break
        if not moved:
            break
    return alloc


def target_split(
    cohort: Cohort, target: str, spec: SplitSpec, repeat: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Split a target user's reports into train and test positions.

    Stratified by class when every class the user has holds at least two
    reports (and ``spec.stratify`` is on); plain random otherwise. The
    stream does not depend on the protocol, so PLM, HM and CBM runs of the
    same (user, repeat) test on the same rows.

    Raises:
        InsufficientDataError: If the user has fewer than two reports
    """
    positions = np.array(cohort.user_index[target], dtype=int)
    n = len(positions)
    if n < 2:
        raise InsufficientDataError(
            f"User {target} has {n} report(s); at least 2 are needed",
            details={"user_id": target, "reports": n},
        )
    n_train = max(1, min(n - 1, _floor_count(spec.target_train_fraction, n)))
    rng = child_rng(spec.seed, "target", cohort.user_ordinal(target), repeat)

    codes = cohort.label_codes(positions)
    present = [c for c in range(len(cohort.class_order)) if (codes == c).any()]
    sizes = [int((codes == c).sum()) for c in present]

    if spec.stratify and len(present) > 1 and min(sizes) >= 2:
        train_parts, test_parts = [], []
        for c, k in zip(present, _allocate(n_train, sizes), strict=True):
            shuffled = rng.permutation(positions[codes == c])
            train_parts.append(shuffled[:k])
            test_parts.append(shuffled[k:])
        train, test = np.concatenate(train_parts), np.concatenate(test_parts)
    else:
        shuffled = rng.permutation(positions)
        train, test = shuffled[:n_train], shuffled[n_train:]
    return np.sort(train), np.sort(test)


def sample_pool(
    cohort: Cohort,
    pool_users: list[str],
    protocol: Protocol,
    target: str,
    spec: SplitSpec,
    repeat: int,
) -> np.ndarray:
    """Row-level sample (without replacement) of ``population_fraction`` of the pool."""
    pool = np.array(
        sorted(p for user_id in pool_users for p in cohort.user_index[user_id]), dtype=int
    )
    if len(pool) == 0:
        return pool
    k = max(1, _floor_count(spec.population_fraction, len(pool)))
    rng = child_rng(spec.seed, protocol.value, "pool", cohort.user_ordinal(target), repeat)
    return np.sort(rng.choice(pool, size=k, replace=False))


def make_split(
    cohort: Cohort,
    protocol: Protocol,
    target: str,
    community: Community | None,
    spec: SplitSpec,
    repeat: int,
) -> Split:
    """
    Build the train/test split of one (protocol, user, repeat) task.

    PLM trains on a pool sample of every other user; HM adds the target's
    training part; CBM restricts the pool to the target's community; ULM
    uses the target's data alone. The test set is always the target's
    held-out part.

    Raises:
        InsufficientDataError: If the target cannot be split
        EmptyCommunityError: If a CBM community has no members
        LeakageError: If train and test overlap
    """
    protocol = Protocol(protocol)
    if target not in cohort.user_index:
        raise InsufficientDataError(f"User {target} has no reports", details={"user_id": target})

    if protocol == Protocol.ULM:
        codes = cohort.label_codes(np.array(cohort.user_index[target]))
        missing = [c for i, c in enumerate(cohort.class_order) if not (codes == i).any()]
        if missing:
            raise InsufficientDataError(
                "class absent", details={"user_id": target, "missing_classes": missing}
            )

    train_target, test_target = target_split(cohort, target, spec, repeat)
    others = [u for u in cohort.users if u != target]

    if protocol == Protocol.PLM:
        train = sample_pool(cohort, others, protocol, target, spec, repeat)
    elif protocol == Protocol.HM:
        pool = sample_pool(cohort, others, protocol, target, spec, repeat)
        train = np.concatenate([train_target, pool])
    elif protocol == Protocol.CBM:
        if community is None:
            raise ConfigValidationError("CBM split requires a community")
        if community.is_empty:
            raise EmptyCommunityError(target, community.threshold)
        members = [u for u in cohort.users if u in community.members]
        pool = sample_pool(cohort, members, protocol, target, spec, repeat)
        train = np.concatenate([train_target, pool])
    else:
        train = train_target

    split = Split(
        train_ids=frozenset(cohort.report_ids[p] for p in train),
        test_ids=frozenset(cohort.report_ids[p] for p in test_target),
    )
    overlap = split.overlap()
    if overlap:
        raise LeakageError(overlap)
    return split


def carve_validation(
    cohort: Cohort, target: str, split: Split, fraction: float, seed: int, repeat: int
) -> tuple[Split, frozenset[str]]:
    """
    Hold out ``fraction`` of the target's training reports for model selection.

    Returns:
        The reduced split (same test set) and the held-out validation ids
    """
    target_train = sorted(
        split.train_ids & {cohort.report_ids[p] for p in cohort.user_index[target]}
    )
    if len(target_train) < 2:
        raise InsufficientDataError(
            f"User {target} has too few training reports for a validation slice",
            details={"user_id": target},
        )
    k = min(len(target_train) - 1, max(1, _floor_count(fraction, len(target_train))))
    rng = child_rng(seed, "validation", cohort.user_ordinal(target), repeat)
    held = frozenset(rng.choice(np.array(target_train), size=k, replace=False).tolist())
    return Split(train_ids=split.train_ids - held, test_ids=split.test_ids), held


def fit_medians(values: np.ndarray) -> np.ndarray:
    """Per-column medians of observed values (0 for fully missing columns)."""
    if values.shape[0] == 0:
        return np.zeros(values.shape[1])
    with np.errstate(all="ignore"):
        observed = ~np.isnan(values).all(axis=0)
        medians = np.zeros(values.shape[1])
        if observed.any():
            medians[observed] = np.nanmedian(values[:, observed], axis=0)
    return medians


def impute(values: np.ndarray, medians: np.ndarray) -> np.ndarray:
    """Replace missing markers with the given per-column medians."""
    return np.where(np.isnan(values), medians[None, :], values)


def smote_oversample(
    features: np.ndarray,
    labels: np.ndarray,
    config: SmoteConfig,
    seed: int | np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Balance every class up to the majority class count.

    Each synthetic row is ``x + lam * (nn - x)`` for a real row ``x`` of the
    class, one of its ``k`` nearest same-class neighbours ``nn`` (Euclidean)
    and ``lam`` uniform in [0, 1]. A class with a single row is grown by
    duplicating it with tiny Gaussian jitter. Original rows come first and
    are returned unchanged.

    Args:
        features: Training rows without missing values
        labels: Class code per row
        config: SMOTE settings
        seed: Seed or generator for the synthetic draws

    Returns:
        (features, labels, synthetic_mask) of the augmented set
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    mask = np.zeros(len(labels), dtype=bool)
    if not config.enabled or len(labels) == 0:
        return features, labels, mask

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    classes, counts = np.unique(labels, return_counts=True)
    majority = int(counts.max())

    new_rows, new_labels = [], []
    for cls, count in zip(classes, counts, strict=True):
        need = majority - int(count)
        if need == 0:
            continue
        members = features[labels == cls]
        if count == 1:
            synthetic = members[0] + rng.normal(0.0, config.jitter_std, (need, features.shape[1]))
        else:
            k = min(config.k_neighbors, int(count) - 1)
            neighbours = (
                NearestNeighbors(n_neighbors=k).fit(members).kneighbors(return_distance=False)
            )
            base = rng.integers(0, count, size=need)
            pick = rng.integers(0, k, size=need)
            lam = rng.random(need)[:, None]
            origin = members[base]
            synthetic = origin + lam * (members[neighbours[base, pick]] - origin)
        new_rows.append(synthetic)
        new_labels.append(np.full(need, cls, dtype=labels.dtype))

    if not new_rows:
        return features, labels, mask
    logger.debug(f"SMOTE added {sum(len(r) for r in new_rows)} synthetic rows")
    return (
        np.vstack([features, *new_rows]),
        np.concatenate([labels, *new_labels]),
        np.concatenate([mask, np.ones(sum(len(r) for r in new_rows), dtype=bool)]),
    )
