"""
Main CLI entry point.

Parses the command line, sets up logging and runs the selected command
behind the CLI error handler.
"""

import sys
from collections.abc import Sequence

from app.cli.error_handler import run_command
from app.cli.router import build_parser
from app.core.config import settings
from app.core.logging import get_logger, setup_logging

logger = get_logger(__name__)


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run one ``moodcomm`` command.

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    logger.debug(f"moodcomm {settings.APP_VERSION}: {args.command}")
    return run_command(args.handler, args)


if __name__ == "__main__":
    sys.exit(main())
