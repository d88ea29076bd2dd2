"""``synth``: generate a synthetic cohort CSV with sidecars."""

import argparse
from typing import Any

from app.cli.dependencies import emit, master_seed, resolve_run_config, seeded, with_seed
from app.core.logging import get_logger
from app.schemas.synth import GeneratorConfig
from app.services.synth_service import emit_csv, generate_cohort
from app.utils.file_helpers import config_hash

logger = get_logger(__name__)

DEFAULT_PATH = "cohort.csv"


def register(subparsers: Any, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        "synth",
        parents=parents,
        help="Generate a synthetic cohort",
        description="Generate a seeded synthetic cohort from the config's generator section.",
    )
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> None:
    config = resolve_run_config(args)
    if config.generator is None:
        generator = with_seed(GeneratorConfig(), master_seed(config))
    else:
        generator = seeded(config.generator, config)
    synthetic = generate_cohort(generator)

    path = emit_csv(synthetic.cohort, config.out or DEFAULT_PATH, synthetic.ground_truth())
    emit(
        {
            "cohort_path": str(path),
            "n_users": len(synthetic.cohort.users),
            "n_reports": len(synthetic.cohort),
            "master_seed": generator.seed,
            "config_hash": config_hash(generator.model_dump(mode="json")),
        }
    )
