"""
Pytest configuration and shared fixtures.

Provides small hand-built cohorts, a tiny synthetic cohort and fast
forest/protocol configurations so protocol runs stay quick.
"""

from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from app.domain.cohort import THREE_CLASS, ClassMapping, Cohort, FeatureSchema
from app.schemas.forest import ForestParams
from app.schemas.protocol import ClassifierConfig, ProtocolConfig
from app.schemas.sampling import SplitSpec
from app.schemas.synth import GeneratorConfig
from app.services.synth_service import SyntheticCohort, emit_csv, generate_cohort

# Raw labels that map to negative, neutral and positive.
RAW = {"negative": 1, "neutral": 3, "positive": 5}


def build_cohort(
    users: Sequence[str],
    classes: Sequence[str],
    features: np.ndarray | Sequence[Sequence[float]],
    contexts: Sequence[str | None] | None = None,
    mapping: ClassMapping = THREE_CLASS,
) -> Cohort:
    """Assemble a cohort from per-row users, class names and feature rows."""
    matrix = np.asarray(features, dtype=float)
    return Cohort.build(
        schema=FeatureSchema(tuple(f"f{j}" for j in range(matrix.shape[1]))),
        mapping=mapping,
        report_ids=[f"r{i:03d}" for i in range(len(users))],
        user_ids=list(users),
        raw_labels=[RAW[c] for c in classes],
        contexts=list(contexts) if contexts is not None else [None] * len(users),
        features=matrix,
    )


@pytest.fixture
def make_cohort() -> Callable[..., Cohort]:
    """Factory for hand-built cohorts."""
    return build_cohort


@pytest.fixture
def tiny_cohort() -> Cohort:
    """
    Four users, six reports each, two features.

    u1 and u2 share a profile, u3 is their opposite and u4 lacks the
    negative class.
    """
    users, classes, rows, contexts = [], [], [], []
    plan = {
        "u1": (["negative", "negative", "neutral", "neutral", "positive", "positive"], (1.0, 0.0)),
        "u2": (["negative", "negative", "neutral", "neutral", "positive", "positive"], (0.9, 0.1)),
        "u3": (["negative", "negative", "neutral", "neutral", "positive", "positive"], (0.0, 1.0)),
        "u4": (["neutral", "neutral", "neutral", "positive", "positive", "positive"], (0.5, 0.5)),
    }
    for user_id, (labels, (a, b)) in plan.items():
        for i, label in enumerate(labels):
            users.append(user_id)
            classes.append(label)
            rows.append((a + 0.01 * i, b + 0.02 * i))
            contexts.append("eating" if i % 2 == 0 else "working")
    return build_cohort(users, classes, rows, contexts)


@pytest.fixture
def generator_config() -> GeneratorConfig:
    """Small clustered cohort: 8 users x 24 reports, 6 features."""
    return GeneratorConfig(
        n_clusters=2,
        n_users=8,
        reports_per_user_mean=24,
        reports_per_user_spread=0,
        n_features=6,
        class_priors=[0.25, 0.35, 0.40],
        seed=3,
    )


@pytest.fixture
def synthetic(generator_config: GeneratorConfig) -> SyntheticCohort:
    return generate_cohort(generator_config)


@pytest.fixture
def synthetic_csv(tmp_path: Path, synthetic: SyntheticCohort) -> Path:
    """The small synthetic cohort written to disk with its sidecars."""
    return emit_csv(synthetic.cohort, tmp_path / "cohort.csv", synthetic.ground_truth())


@pytest.fixture
def fast_forest() -> ForestParams:
    return ForestParams(n_trees=5, max_depth=6)


@pytest.fixture
def protocol_config(fast_forest: ForestParams) -> Callable[..., ProtocolConfig]:
    """Factory for protocol configs with a fast forest and two repeats."""

    def _make(protocol: str, **overrides: Any) -> ProtocolConfig:
        data: dict[str, Any] = {
            "protocol": protocol,
            "split": SplitSpec(repeats=2),
            "classifier": ClassifierConfig(forest=fast_forest),
            "seed": 11,
        }
        data.update(overrides)
        return ProtocolConfig(**data)

    return _make
