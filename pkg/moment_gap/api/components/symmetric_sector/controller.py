"""
The gap-scan command: exact sector gaps over a range of n against a1 / n.
"""

import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from moment_gap.api.components.gate_averaging.services import resolve_distribution
from moment_gap.api.components.mean_field.services import gap_prediction_vs_exact
from moment_gap.api.middleware.provenance import current_run, provenance_middleware
from moment_gap.services.helper import parse_int_range
from moment_gap.services.output import render_table, write_csv, write_json

logger = logging.getLogger(__name__)

GAP_SCAN_HEADER = ("n", "dim", "unit_multiplicity", "lambda1", "gap", "meanfield_prediction", "rel_dev")


@provenance_middleware("gap-scan")
def gap_scan(
    t: Annotated[int, typer.Option("--t", help="Moment order.")] = 2,
    n: Annotated[str, typer.Option("--n", help="Qubit counts, e.g. 4..30 or 4,8,16.")] = "4..30",
    dist: Annotated[str, typer.Option("--dist", help="haar-u4, a built-in gate set or a gate-set JSON file.")] = "haar-u4",
    basis: Annotated[str, typer.Option("--basis", help="auto, invariant or full.")] = "auto",
    out: Annotated[Path, typer.Option("--out", help="CSV output.")] = Path("gaps.csv"),
    summary: Annotated[Optional[Path], typer.Option("--summary", help="JSON summary; next to the CSV by default.")] = None,
    tolerance: Annotated[float, typer.Option("--tolerance", help="Largest accepted rel_dev at the largest n; the deviation must also be decreasing there.")] = 0.05,
) -> int:
    """Exact symmetric-sector gaps against the mean-field prediction."""
    run = current_run()
    scan = gap_prediction_vs_exact(resolve_distribution(dist), t, parse_int_range(n), basis, settings=run.settings)
    write_csv(out, GAP_SCAN_HEADER, [row.model_dump() for row in scan.rows])

    last = scan.rows[-1]
    # the deviation must also be shrinking over the last rows of the scan
    passed = last.rel_dev <= tolerance and scan.crossover_n is not None
    write_json(
        summary or out.with_suffix(".json"),
        {
            "a1": scan.prediction.a1,
            "band": scan.prediction.band,
            "basis": scan.basis_kind,
            "crossover_n": scan.crossover_n,
            "distribution": scan.distribution,
            "largest_n": last.n,
            "rel_dev_at_largest_n": last.rel_dev,
            "t": scan.t,
            "tail_slope": scan.tail_slope,
            "tolerance": tolerance,
            "verdict": "pass" if passed else "fail",
            "provenance": run.provenance(),
        },
    )
    render_table(
        f"gap scan, t={t}, {scan.distribution}",
        GAP_SCAN_HEADER,
        [[getattr(row, column) for column in GAP_SCAN_HEADER] for row in scan.rows],
    )
    logger.info("a1 = %.10f, crossover n = %s, verdict %s", scan.prediction.a1, scan.crossover_n, passed)
    return 0 if passed else 2
