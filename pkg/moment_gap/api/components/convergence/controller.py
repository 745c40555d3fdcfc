"""
The bound command: design length k_c from a gap, lambda1 or a1.
"""

from pathlib import Path
from typing import Annotated, Optional

import typer

from moment_gap.api.middleware.provenance import current_run, provenance_middleware
from moment_gap.services.output import render_table, write_json
from .services import convergence_time_bound


@provenance_middleware("bound")
def bound(
    n: Annotated[int, typer.Option("--n", help="Number of qubits.")],
    t: Annotated[int, typer.Option("--t", help="Moment order.")] = 2,
    epsilon: Annotated[float, typer.Option("--epsilon", help="Target 1-norm distance.")] = 1e-3,
    gap: Annotated[Optional[float], typer.Option("--gap", help="Spectral gap Delta_t.")] = None,
    lambda1: Annotated[Optional[float], typer.Option("--lambda1", help="Subleading eigenvalue.")] = None,
    a1: Annotated[Optional[float], typer.Option("--a1", help="Leading coefficient; uses Delta = a1 / n.")] = None,
    out: Annotated[Optional[Path], typer.Option("--out", help="JSON output; stdout by default.")] = None,
) -> int:
    """Depth after which the t-copy average is epsilon-close to Haar."""
    run = current_run()
    result = convergence_time_bound(n, t, epsilon, gap=gap, lambda1=lambda1, a1=a1)
    payload = result.model_dump(mode="json")
    payload["provenance"] = run.provenance()
    write_json(out, payload)
    render_table(
        "design length",
        ["k_c", "sharp k_c", "ln(1/eps)/gap", "n t ln2/gap"],
        [[result.bound, result.sharp_bound, result.accuracy_term, result.size_term]],
    )
    return 0
