"""
Synthetic cohort generator.

Builds seeded cohorts with latent user clusters, a skewed class prior
tilted per cluster, cluster- and user-specific class-conditional feature
offsets and context tags. One context can be shifted in feature space and
one can carry extra label noise, which is what the context analyses examine.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from app.core.logging import get_logger
from app.core.rng import child_rng
from app.domain.cohort import THREE_CLASS, Cohort, FeatureSchema
from app.schemas.synth import GeneratorConfig
from app.services.cohort_service import CohortService
from app.utils.file_helpers import write_json

logger = get_logger(__name__)

# Raw labels each class may be reported as (the three-class mapping inverted).
RAW_CHOICES = ((1, 2), (3,), (4, 5))


@dataclass(frozen=True)
class SyntheticCohort:
    """A generated cohort plus the ground truth that produced it."""

    cohort: Cohort
    user_cluster: dict[str, int]
    cluster_priors: np.ndarray
    latent_class: np.ndarray
    class_logits: np.ndarray

    def ground_truth(self) -> dict[str, Any]:
        """JSON-ready sidecar (user clusters, priors, per-report latent class and logits)."""
        return {
            "user_cluster": self.user_cluster,
            "cluster_priors": self.cluster_priors.tolist(),
            "class_order": list(self.cohort.class_order),
            "reports": [
                {
                    "report_id": report_id,
                    "latent_class": self.cohort.class_order[int(self.latent_class[i])],
                    "logits": [float(v) for v in self.class_logits[i]],
                }
                for i, report_id in enumerate(self.cohort.report_ids)
            ],
        }


# Dirichlet concentration of the per-cluster tilt draws.
TILT_CONCENTRATION = 10.0


def _cluster_priors(config: GeneratorConfig, rng: np.random.Generator) -> np.ndarray:
    """Cluster priors mixed toward Dirichlet draws centred on the global prior."""
    base = np.asarray(config.class_priors, dtype=float)
    alpha = TILT_CONCENTRATION * np.maximum(base, 1e-6)
    tilts = rng.dirichlet(alpha, size=config.n_clusters)
    priors = (1.0 - config.cluster_tilt) * base[None, :] + config.cluster_tilt * tilts
    return priors / priors.sum(axis=1, keepdims=True)


def generate_cohort(config: GeneratorConfig) -> SyntheticCohort:
    """
    Generate a cohort from ``config``; identical configs give identical cohorts.

    Users are assigned to clusters round-robin. A report's class is drawn
    from its cluster's prior; its features are the user's centre (cluster
    centroid plus jitter) plus the user's offset for that class, the
    context shift when tagged with the shifted context, and Gaussian
    noise. Class offsets mix a cluster-wide pattern with a user-specific
    one weighted by ``user_signal``.
    """
    rng = child_rng(config.seed, "synth")
    n_features, sigma = config.n_features, config.noise_std
    tags = list(config.context_tags)
    tag_p = np.array([config.context_tags[t] for t in tags])

    centroids = rng.normal(0.0, config.cluster_separation * sigma, (config.n_clusters, n_features))
    cluster_dirs = rng.normal(0.0, 1.0, (config.n_clusters, 3, n_features))
    priors = _cluster_priors(config, rng)
    shift_dir = rng.normal(0.0, 1.0, n_features)

    user_ids, report_ids, raw_labels, contexts, rows = [], [], [], [], []
    latent, logits = [], []
    user_cluster: dict[str, int] = {}
    width = max(3, len(str(config.n_users)))

    for u in range(config.n_users):
        user_id = f"u{u + 1:0{width}d}"
        k = u % config.n_clusters
        user_cluster[user_id] = k
        centre = centroids[k] + rng.normal(0.0, config.user_spread * sigma, n_features)
        user_dirs = rng.normal(0.0, 1.0, (3, n_features))
        offsets = config.label_signal * sigma * (cluster_dirs[k] + config.user_signal * user_dirs)
        means = centre[None, :] + offsets

        n_reports = max(
            config.min_reports_per_user,
            int(round(rng.normal(config.reports_per_user_mean, config.reports_per_user_spread))),
        )
        classes = rng.choice(3, size=n_reports, p=priors[k])
        tagged = rng.choice(len(tags), size=n_reports, p=tag_p)
        noise = rng.normal(0.0, sigma, (n_reports, n_features))

        for j in range(n_reports):
            c = int(classes[j])
            tag = tags[int(tagged[j])]
            x = means[c] + noise[j]
            if tag == config.shifted_context:
                x = x + config.context_shift * sigma * shift_dir
            distance = ((x[None, :] - means) ** 2).sum(axis=1)
            logits.append(np.log(np.maximum(priors[k], 1e-300)) - distance / (2.0 * sigma**2))
            latent.append(c)

            label = c
            if tag == config.hard_context and rng.random() < config.hard_context_noise:
                label = int(rng.choice(3, p=priors[k]))
            choices = RAW_CHOICES[label]
            raw_labels.append(choices[int(rng.integers(len(choices)))])

            user_ids.append(user_id)
            report_ids.append(f"{user_id}-{j + 1:03d}")
            contexts.append(tag)
            rows.append(x)

    features = np.vstack(rows)
    if config.missing_rate > 0:
        features[rng.random(features.shape) < config.missing_rate] = np.nan

    cohort = Cohort.build(
        schema=FeatureSchema(tuple(f"f{j:02d}" for j in range(n_features))),
        mapping=THREE_CLASS,
        report_ids=report_ids,
        user_ids=user_ids,
        raw_labels=raw_labels,
        contexts=contexts,
        features=features,
    )
    logger.info(
        f"Generated {len(cohort)} reports for {config.n_users} users in "
        f"{config.n_clusters} clusters"
    )
    return SyntheticCohort(
        cohort=cohort,
        user_cluster=user_cluster,
        cluster_priors=priors,
        latent_class=np.array(latent, dtype=int),
        class_logits=np.vstack(logits),
    )


def emit_csv(
    cohort: Cohort, path: str | Path, ground_truth: dict[str, Any] | None = None
) -> Path:
    """
    Write the cohort CSV with its schema sidecar and optional ground truth.

    Sidecars go next to the CSV as ``<stem>.schema.json`` and
    ``<stem>.truth.json``.

    Raises:
        IoError: If a file cannot be written
    """
    service = CohortService()
    target = service.write_csv(cohort, path)
    write_json(target.with_suffix(".schema.json"), service.schema_sidecar(cohort))
    if ground_truth is not None:
        write_json(target.with_suffix(".truth.json"), ground_truth)
    return target
