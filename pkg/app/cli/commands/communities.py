"""``communities``: community sizes across a threshold grid."""

import argparse
from typing import Any

from app.cli.dependencies import (
    emit,
    load_cohort,
    master_seed,
    output_dir,
    parse_grid,
    resolve_run_config,
)
from app.schemas.community import ThresholdGrid
from app.services.cohort_service import CohortService
from app.services.community_service import sweep_communities, write_sweep
from app.services.protocol_service import build_similarity, provenance
from app.utils.file_helpers import config_hash, write_json


def register(subparsers: Any, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        "communities", parents=parents, help="Sweep community sizes over thresholds"
    )
    parser.add_argument("cohort", nargs="?", help="Cohort CSV")
    parser.add_argument("--grid", default=None, help="Comma-separated thresholds")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> None:
    config = resolve_run_config(args)
    grid = parse_grid(args.grid) or config.grid or ThresholdGrid()
    cohort = load_cohort(config)
    out = output_dir(config)

    sweep = sweep_communities(build_similarity(cohort), grid)
    echo = {"grid": grid.model_dump(mode="json"), "cohort_path": config.cohort_path}
    write_sweep(
        sweep,
        out,
        extra={"config": echo, "config_hash": config_hash(echo)},
        provenance=provenance(master_seed(config), echo),
    )
    write_json(out / "schema.json", CohortService().schema_sidecar(cohort))
    emit({"summary": [row.model_dump(mode="json") for row in sweep.summary]})
