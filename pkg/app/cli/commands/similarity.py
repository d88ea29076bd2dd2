"""``similarity``: user profiles and the cosine similarity matrix."""

import argparse
from typing import Any

from app.cli.dependencies import (
    emit,
    load_cohort,
    master_seed,
    output_dir,
    resolve_run_config,
)
from app.domain.profile import ScalingMode
from app.services.cohort_service import CohortService
from app.services.profile_service import (
    aggregate_users,
    cosine_similarity,
    dump_profiles,
    dump_similarity,
    fit_scaler,
)
from app.services.protocol_service import provenance
from app.utils.file_helpers import write_json


def register(subparsers: Any, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        "similarity", parents=parents, help="Write user profiles and the similarity matrix"
    )
    parser.add_argument("cohort", nargs="?", help="Cohort CSV")
    parser.add_argument(
        "--scaling",
        choices=[m.value for m in ScalingMode],
        default=ScalingMode.MINMAX.value,
        help="Feature scaling before aggregation",
    )
    parser.add_argument(
        "--include-labels", action="store_true", help="Append label fractions to profiles"
    )
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> None:
    config = resolve_run_config(args)
    cohort = load_cohort(config)
    out = output_dir(config)
    echo = {
        "cohort_path": config.cohort_path,
        "scaling": args.scaling,
        "include_labels": args.include_labels,
    }
    meta = provenance(master_seed(config), echo)

    profiles = aggregate_users(
        cohort, fit_scaler(cohort, ScalingMode(args.scaling)), include_labels=args.include_labels
    )
    matrix = cosine_similarity(profiles)
    emit(
        {
            "profiles": str(dump_profiles(profiles, out / "profiles.csv", meta=meta)),
            "similarity": str(dump_similarity(matrix, out / "similarity.csv", meta=meta)),
            "schema": str(write_json(out / "schema.json", CohortService().schema_sidecar(cohort))),
            "n_users": len(matrix),
        }
    )
