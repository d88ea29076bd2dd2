"""
``run``: evaluate a protocol or a context analysis on a cohort.

The cohort comes from ``cohort_path`` or, when only a generator section
is configured, is synthesized in memory. Reports and plot data are
written under the output directory.
"""

import argparse
from enum import StrEnum
from typing import Any

from app.cli.dependencies import (
    emit,
    load_cohort,
    master_seed,
    n_jobs,
    output_dir,
    parse_grid,
    parse_policy,
    resolve_run_config,
    seeded,
)
from app.core.exceptions import ConfigValidationError
from app.core.logging import get_logger
from app.domain.cohort import Cohort
from app.schemas.community import PerUserMaxPolicy
from app.schemas.protocol import InjectionConfig, ProtocolConfig
from app.schemas.run import RunConfig
from app.schemas.sampling import Protocol
from app.services.protocol_service import ProtocolRunner, context_breakdown, injection_sweep
from app.services.report_service import ReportService
from app.services.synth_service import generate_cohort
from app.utils.validators import validate_model

logger = get_logger(__name__)


class Analysis(StrEnum):
    EXPERIMENT = "experiment"
    CONTEXT_BREAKDOWN = "context-breakdown"
    INJECTION_SWEEP = "injection-sweep"


def register(subparsers: Any, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        "run",
        parents=parents,
        help="Run an evaluation protocol or context analysis",
    )
    parser.add_argument("cohort", nargs="?", help="Cohort CSV (else the generator section)")
    parser.add_argument(
        "--protocol", choices=[p.value for p in Protocol], default=None, help="Protocol to run"
    )
    parser.add_argument(
        "--threshold-policy",
        default=None,
        help="CBM policy: fixed:<th>, per-user-max[:validation] or max-avg[:<th>]",
    )
    parser.add_argument("--grid", default=None, help="Comma-separated CBM thresholds")
    parser.add_argument(
        "--analysis",
        choices=[a.value for a in Analysis],
        default=Analysis.EXPERIMENT.value,
        help="Plain experiment, per-context breakdown or injection sweep",
    )
    parser.set_defaults(handler=handle)


def resolve_cohort(config: RunConfig) -> Cohort:
    """
    Load the configured cohort or synthesize it from the generator section.

    Raises:
        ConfigValidationError: If neither is configured
    """
    if config.cohort_path:
        return load_cohort(config)
    if config.generator is not None:
        logger.info("No cohort path given, synthesizing from the generator section")
        return generate_cohort(seeded(config.generator, config)).cohort
    raise ConfigValidationError("No cohort path or generator section given")


def resolve_protocol_config(
    args: argparse.Namespace, config: RunConfig, keep_predictions: bool = False
) -> ProtocolConfig:
    """
    Merge the protocol section with ``--protocol``, ``--threshold-policy`` and ``--grid``.

    CBM without any policy defaults to PerUserMax over the grid.

    Raises:
        ConfigValidationError: If no protocol is named or the result does not validate
    """
    grid = parse_grid(args.grid) or config.grid
    if config.protocol is not None:
        data: dict[str, Any] = config.protocol.model_dump(mode="json")
    else:
        data = {"seed": master_seed(config)}
    if config.seed is not None:
        data["seed"] = config.seed
    if args.protocol:
        data["protocol"] = args.protocol
    if "protocol" not in data:
        raise ConfigValidationError("No protocol given (--protocol or protocol section)")

    if data["protocol"] != Protocol.CBM.value:
        data["threshold_policy"] = None
    elif args.threshold_policy:
        data["threshold_policy"] = parse_policy(args.threshold_policy, grid).model_dump(mode="json")
    elif data.get("threshold_policy") is None:
        policy = PerUserMaxPolicy(grid=grid) if grid is not None else PerUserMaxPolicy()
        data["threshold_policy"] = policy.model_dump(mode="json")
    elif grid is not None and "grid" in data["threshold_policy"]:
        data["threshold_policy"]["grid"] = grid.model_dump(mode="json")

    if keep_predictions:
        data["keep_predictions"] = True
    return validate_model(ProtocolConfig, data)


def resolve_injection_config(config: RunConfig) -> InjectionConfig:
    if config.injection is None:
        return validate_model(InjectionConfig, {"seed": master_seed(config)})
    return seeded(config.injection, config)


def handle(args: argparse.Namespace) -> None:
    config = resolve_run_config(args)
    analysis = Analysis(args.analysis)
    out = output_dir(config)
    writer = ReportService()
    cohort = resolve_cohort(config)

    if analysis == Analysis.INJECTION_SWEEP:
        sweep = injection_sweep(cohort, resolve_injection_config(config), n_jobs(config))
        paths = writer.write_injection(sweep, out)
        emit(
            {
                "analysis": analysis.value,
                "files": [str(p) for p in paths],
                "rows": [row.model_dump(mode="json") for row in sweep.rows],
            }
        )
        return

    protocol_config = resolve_protocol_config(
        args, config, keep_predictions=analysis == Analysis.CONTEXT_BREAKDOWN
    )
    report = ProtocolRunner(cohort, protocol_config, n_jobs=n_jobs(config)).run()
    paths = writer.write_experiment(report, out)
    if analysis == Analysis.CONTEXT_BREAKDOWN:
        paths += writer.write_context(context_breakdown(report), out)

    emit(
        {
            "analysis": analysis.value,
            "protocol": report.protocol.value,
            "files": [str(p) for p in paths],
            "users_ok": report.n_users_ok,
            "users_skipped": report.n_users_skipped,
            "aggregate": {k: v.model_dump(mode="json") for k, v in report.aggregate.items()},
        }
    )
