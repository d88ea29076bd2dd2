"""
Global error handling for CLI commands.

Catches every exception a command raises, writes a machine-readable
error document to stderr and turns it into the process exit code.
"""

import argparse
import logging
import sys
import traceback
from collections.abc import Callable
from datetime import UTC, datetime

from app.core.exceptions import BaseEngineError
from app.core.logging import get_logger
from app.schemas.common import ErrorResponse
from app.utils.file_helpers import canonical_json

logger = get_logger(__name__)

INTERNAL_EXIT_CODE = 70

Handler = Callable[[argparse.Namespace], None]


def _write_error(response: ErrorResponse) -> None:
    sys.stderr.write(canonical_json(response.model_dump(mode="json", exclude_none=True)))


def run_command(handler: Handler, args: argparse.Namespace) -> int:
    """
    Run a command handler and map its outcome to an exit code.

    Returns:
        0 on success, the error's exit code for engine errors and 70 for
        anything unexpected
    """
    try:
        handler(args)
        return 0
    except BaseEngineError as e:
        logger.warning(f"{e.code}: {e.message}")
        _write_error(
            ErrorResponse(
                error=e.message,
                code=e.code,
                details=e.details,
                exit_code=e.exit_code,
                timestamp=datetime.now(UTC).isoformat(),
            )
        )
        return e.exit_code
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return 130
    except Exception as e:
        logger.error(f"Unexpected error: {e!r}")
        details = {"type": type(e).__name__}
        if logging.getLogger().isEnabledFor(logging.DEBUG):
            details["traceback"] = traceback.format_exc()
        _write_error(
            ErrorResponse(
                error=str(e) or type(e).__name__,
                code="INTERNAL",
                details=details,
                exit_code=INTERNAL_EXIT_CODE,
                timestamp=datetime.now(UTC).isoformat(),
            )
        )
        return INTERNAL_EXIT_CODE
