"""
The invariants-selftest command.
"""

from pathlib import Path
from typing import Annotated, Optional

import typer

from moment_gap.api.middleware.provenance import current_run, provenance_middleware
from moment_gap.services.output import render_table, write_json
from .services import run_property_suite


@provenance_middleware("invariants-selftest")
def invariants_selftest(
    t_max: Annotated[int, typer.Option("--t-max", help="Largest moment order checked.")] = 3,
    out: Annotated[Optional[Path], typer.Option("--out", help="JSON output; stdout by default.")] = None,
) -> int:
    """Run the property suite and report every named check."""
    run = current_run()
    report = run_property_suite(t_max, run.settings)
    write_json(
        out,
        {
            "checks": [check.model_dump(mode="json") for check in report.checks],
            "passed": report.passed,
            "provenance": run.provenance(),
        },
    )
    render_table(
        "invariants self-test",
        ["check", "t", "result", "value"],
        [[check.name, "" if check.t is None else str(check.t), "pass" if check.passed else "FAIL", check.value]
         for check in report.checks],
    )
    return 0 if report.passed else 2
