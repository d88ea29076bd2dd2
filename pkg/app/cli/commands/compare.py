"""``compare``: side-by-side metrics of several experiment reports."""

import argparse
import sys
from typing import Any

from app.cli.dependencies import resolve_run_config
from app.services.report_service import ReportService
from app.utils.file_helpers import write_table


def register(subparsers: Any, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        "compare", parents=parents, help="Compare experiment reports"
    )
    parser.add_argument("reports", nargs="+", help="report.json files")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> None:
    config = resolve_run_config(args)
    table = ReportService().compare(args.reports)
    if config.out:
        write_table(config.out, table)
    table.to_csv(sys.stdout, index=False, lineterminator="\n", float_format="%.10g")
