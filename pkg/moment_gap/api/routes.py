"""
This module registers every component command on the application.

Modules:
    .components.symmetric_sector.controller: gap-scan.
    .components.mean_field.controller: meanfield.
    .components.circuit_mc.controller: mc-validate.
    .components.convergence.controller: bound.
    .components.selftest.controller: invariants-selftest.
"""

import typer

from .components.circuit_mc.controller import mc_validate
from .components.convergence.controller import bound
from .components.mean_field.controller import meanfield
from .components.selftest.controller import invariants_selftest
from .components.symmetric_sector.controller import gap_scan

COMMANDS = {
    "gap-scan": gap_scan,
    "meanfield": meanfield,
    "mc-validate": mc_validate,
    "bound": bound,
    "invariants-selftest": invariants_selftest,
}


def include_routes(app: typer.Typer) -> None:
    for name, command in COMMANDS.items():
        app.command(name)(command)
