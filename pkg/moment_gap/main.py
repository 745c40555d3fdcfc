"""
This module contains the command-line application.
"""

import sys
from pathlib import Path
from typing import Annotated, List, Optional

import click
import typer

from moment_gap.api.middleware.provenance import report_error
from moment_gap.api.routes import include_routes
from moment_gap.config.logger import configure_logging
from moment_gap.config.settings import configure, load_overlay
from moment_gap.exceptions import MomentGapError

app = typer.Typer(
    name="moment-gap",
    help="Spectral gaps of moment operators of permutation-invariant random circuits.",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)


@app.callback()
def configure_run(
    config: Annotated[Optional[Path], typer.Option("--config", help="YAML file overlaying the settings.")] = None,
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Log at DEBUG level.")] = False,
) -> None:
    """
    Load settings and logging before any command runs.
    """
    settings = configure(load_overlay(config) if config is not None else None)
    configure_logging("DEBUG" if verbose else settings.log_level)


include_routes(app)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the application and return its exit code.

    Parameters:
    argv (Optional[List[str]]): Arguments without the program name; sys.argv by default.

    Returns:
    int: 0 on success, 2 on a failed verdict, 1 on any error.
    """
    try:
        result = app(args=argv, prog_name="moment-gap", standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except MomentGapError as exc:
        report_error(exc)
        return 1
    return result if isinstance(result, int) else 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
