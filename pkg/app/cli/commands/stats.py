"""``stats``: class distribution and eligibility of a cohort."""

import argparse
from typing import Any

from app.cli.dependencies import emit, load_cohort, master_seed, resolve_run_config
from app.services.cohort_service import CohortService
from app.services.protocol_service import provenance
from app.utils.file_helpers import write_json


def register(subparsers: Any, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        "stats",
        parents=parents,
        help="Class distribution and eligibility report",
    )
    parser.add_argument("cohort", nargs="?", help="Cohort CSV")
    parser.add_argument("--mapping", default=None, help="Class mapping (three-class, five-class)")
    parser.add_argument(
        "--by-context", action="store_true", help="Also break the distribution down by context"
    )
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> None:
    config = resolve_run_config(args)
    cohort = load_cohort(config, args.mapping)
    service = CohortService()

    payload = {
        "schema": service.schema_sidecar(cohort),
        "distribution": [
            d.model_dump(mode="json")
            for d in service.class_distribution(cohort, by_context=args.by_context)
        ],
        "eligibility": service.eligibility_stats(cohort).model_dump(mode="json"),
    }
    if config.out:
        echo = {
            "cohort_path": config.cohort_path,
            "mapping": args.mapping or config.ingest.mapping,
            "by_context": args.by_context,
        }
        meta = provenance(master_seed(config), echo)
        write_json(config.out, {**payload, "provenance": meta.model_dump(mode="json")})
    emit(payload)
