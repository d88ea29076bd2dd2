"""
Shared helpers for CLI commands.

Resolves the effective run configuration from flags, environment and
config file, loads cohorts and writes command output to stdout.
"""

import argparse
import sys
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError

from app.core.config import RunOverrides, settings
from app.core.exceptions import ConfigValidationError
from app.core.logging import get_logger
from app.domain.cohort import ClassMapping, Cohort
from app.schemas.community import (
    FixedPolicy,
    MaxAvgPolicy,
    PerUserMaxPolicy,
    SelectionMode,
    ThresholdGrid,
    ThresholdPolicy,
)
from app.schemas.run import RunConfig
from app.services.cohort_service import CohortService
from app.utils.file_helpers import canonical_json, read_config_file
from app.utils.validators import validate_model

__all__ = [
    "resolve_run_config",
    "master_seed",
    "with_seed",
    "seeded",
    "n_jobs",
    "output_dir",
    "load_cohort",
    "parse_policy",
    "parse_grid",
    "emit",
]

logger = get_logger(__name__)


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    """
    Build the RunConfig for a command.

    Precedence for overlapping keys: command-line flags, then
    ``MOODCOMM_RUN_*`` environment variables, then the config file.

    Raises:
        IoError: If the config file cannot be read
        ConfigValidationError: If the merged config does not validate
    """
    data: dict[str, Any] = read_config_file(args.config) if args.config else {}

    try:
        data.update(RunOverrides().present())
    except ValidationError as e:
        raise ConfigValidationError(
            "Invalid MOODCOMM_RUN_* environment override",
            details={
                "errors": [
                    {"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]}
                    for err in e.errors()
                ]
            },
        ) from e

    for key in ("seed", "threads", "out"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    cohort = getattr(args, "cohort", None)
    if cohort:
        data["cohort_path"] = cohort

    config = validate_model(RunConfig, data)
    logger.debug(f"Resolved run config: {config.model_dump(mode='json')}")
    return config


def master_seed(config: RunConfig) -> int:
    return settings.SEED if config.seed is None else config.seed


def with_seed[M: BaseModel](model: M, seed: int) -> M:
    """Revalidate a config section with a new seed so cross-field validators rerun."""
    return validate_model(type(model), {**model.model_dump(), "seed": seed})


def seeded[M: BaseModel](model: M, config: RunConfig) -> M:
    """Apply the run's master seed to a config section when one was given."""
    return model if config.seed is None else with_seed(model, config.seed)


def n_jobs(config: RunConfig) -> int:
    """joblib worker count: flags/config first, then the THREADS setting."""
    if config.threads is None:
        return settings.n_jobs
    return -1 if config.threads == 0 else config.threads


def output_dir(config: RunConfig) -> Path:
    return Path(config.out or settings.OUTPUT_DIR)


def load_cohort(config: RunConfig, mapping: str | None = None) -> Cohort:
    """
    Load the cohort named by the config (class mapping from ``ingest`` unless given).

    Raises:
        ConfigValidationError: If no cohort path was given
    """
    if not config.cohort_path:
        raise ConfigValidationError("No cohort path given (argument or cohort_path in config)")
    return CohortService().load_csv(
        config.cohort_path, ClassMapping.by_name(mapping or config.ingest.mapping), config.ingest
    )


def parse_grid(text: str | None) -> ThresholdGrid | None:
    if text is None:
        return None
    try:
        return ThresholdGrid.parse(text)
    except ValueError as e:
        raise ConfigValidationError(
            f"Invalid threshold grid: {text}", details={"error": str(e)}
        ) from e


def parse_policy(text: str, grid: ThresholdGrid | None = None) -> ThresholdPolicy:
    """
    Parse a ``--threshold-policy`` value.

    Accepted forms: ``fixed:<th>``, ``per-user-max``, ``per-user-max:validation``,
    ``max-avg`` and ``max-avg:<th>``.

    Raises:
        ConfigValidationError: On any other form
    """
    kind, _, arg = text.partition(":")
    extra: dict[str, Any] = {"grid": grid} if grid is not None else {}
    try:
        if kind == "fixed" and arg:
            return FixedPolicy(threshold=float(arg))
        if kind == "per-user-max":
            return PerUserMaxPolicy(selection=SelectionMode(arg or "test"), **extra)
        if kind == "max-avg":
            return MaxAvgPolicy(value=float(arg) if arg else None, **extra)
    except ValueError as e:
        raise ConfigValidationError(
            f"Invalid threshold policy: {text}", details={"error": str(e)}
        ) from e
    raise ConfigValidationError(
        f"Invalid threshold policy: {text}",
        details={"accepted": ["fixed:<th>", "per-user-max[:validation]", "max-avg[:<th>]"]},
    )


def emit(payload: Any) -> None:
    """Write a JSON document to stdout."""
    sys.stdout.write(canonical_json(payload))
