"""
CLI main router.

Aggregates all command modules under one argparse parser.
"""

import argparse

from app.cli.commands import communities, compare, run, similarity, stats, synth
from app.core.config import settings

COMMANDS = (synth, stats, similarity, communities, run, compare)


def common_options() -> argparse.ArgumentParser:
    """Options every command accepts."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", default=None, help="Run config file (JSON or YAML)")
    parser.add_argument("--seed", type=int, default=None, help="Master seed")
    parser.add_argument("--out", default=None, help="Output path or directory")
    parser.add_argument(
        "--threads", type=int, default=None, help="Parallel workers (0 = all cores)"
    )
    parser.add_argument("--log-level", default=None, help="Override the configured log level")
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moodcomm",
        description="Community-based model personalization for mood-while-eating inference.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    parents = [common_options()]
    for command in COMMANDS:
        command.register(subparsers, parents)
    return parser
