"""
Command middleware: run bookkeeping and conversion of domain errors to exit codes.

Every command is wrapped so that its bound parameters and the active settings
are available to the command body as a RunConfig, and so that a
MomentGapError raised anywhere below ends the command with a red message on
stderr and exit code 1. The wrapped command returns its own exit code:
0 on success, 2 when a verdict fails.
"""

import functools
import inspect
import logging
from contextvars import ContextVar
from typing import Callable, Optional

import typer

from moment_gap.config.logger import stderr_console
from moment_gap.config.settings import get_settings
from moment_gap.exceptions import ConfigurationError, MomentGapError
from moment_gap.models import RunConfig

logger = logging.getLogger(__name__)

_current_run: ContextVar[Optional[RunConfig]] = ContextVar("current_run", default=None)


def current_run() -> RunConfig:
    run = _current_run.get()
    if run is None:
        raise ConfigurationError("no command is running")
    return run


def report_error(exc: MomentGapError) -> None:
    stderr_console.print(f"[bold red]error ({type(exc).__name__}):[/bold red] {exc}", highlight=False)


def provenance_middleware(command: str) -> Callable[[Callable[..., int]], Callable[..., None]]:
    """
    Wrap a command function.

    Parameters:
    command (str): The subcommand name recorded in the provenance block.

    Returns:
    Callable: A decorator whose result keeps the wrapped signature for typer.
    """

    def decorator(function: Callable[..., int]) -> Callable[..., None]:
        signature = inspect.signature(function)

        @functools.wraps(function)
        def wrapper(*args, **kwargs) -> None:
            bound = signature.bind(*args, **kwargs)
            bound.apply_defaults()
            run = RunConfig(command=command, parameters=dict(bound.arguments), settings=get_settings())
            token = _current_run.set(run)
            logger.debug("running %s with %s", command, run.parameters)
            try:
                code = function(*args, **kwargs)
            except MomentGapError as exc:
                logger.debug("%s failed", command, exc_info=True)
                report_error(exc)
                raise typer.Exit(code=1) from exc
            finally:
                _current_run.reset(token)
            raise typer.Exit(code=code or 0)

        return wrapper

    return decorator
