"""
Main application entry point.

This module builds the command-line parser, includes the subcommands and maps
application exceptions to process exit codes.
"""

import argparse
import sys
from typing import List, Optional

from app.commands.experiment_commands import register as register_experiments
from app.commands.instance_commands import register as register_instances
from app.errors import BaseAppException
from app.utils.logger import get_logger

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relay-ee",
        description=(
            "Energy-efficient power and subcarrier allocation for relay-assisted "
            "OFDMA downlinks."
        ),
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_experiments(subparsers)
    register_instances(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand and return its exit code.

    A BaseAppException is logged as one JSON line naming its class and
    returns its exit code; any other exception returns 1.
    """
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BaseAppException as exc:
        logger.error(
            "[%s] %s",
            type(exc).__name__,
            exc.message,
            extra={"error": type(exc).__name__, "details": exc.details},
        )
        return exc.exit_code
    except Exception as exc:  # pylint: disable=broad-except
        logger.error(
            "[Unhandled Exception] Internal error",
            exc_info=True,
            extra={"error": type(exc).__name__, "details": str(exc)},
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
