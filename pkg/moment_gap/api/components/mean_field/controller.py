"""
The meanfield command: a1, the attaining band and its witness operator.
"""

from pathlib import Path
from typing import Annotated, Optional

import typer

from moment_gap.api.components.gate_averaging import services as gate_averaging
from moment_gap.api.middleware.provenance import current_run, provenance_middleware
from moment_gap.services.output import render_table, write_json
from .services import leading_coefficient


@provenance_middleware("meanfield")
def meanfield(
    t: Annotated[int, typer.Option("--t", help="Moment order.")] = 2,
    dist: Annotated[str, typer.Option("--dist", help="haar-u4, a built-in gate set or a gate-set JSON file.")] = "haar-u4",
    basis: Annotated[str, typer.Option("--basis", help="auto, invariant or full.")] = "auto",
    antisymmetric: Annotated[
        Optional[bool],
        typer.Option("--antisymmetric/--no-antisymmetric", help="Force the antisymmetric band in or out."),
    ] = None,
    out: Annotated[Optional[Path], typer.Option("--out", help="JSON output; stdout by default.")] = None,
) -> int:
    """Leading coefficient of the gap, Delta ~ a1 / n."""
    run = current_run()
    distribution = gate_averaging.resolve_distribution(dist)
    kind = gate_averaging.choose_local_basis(distribution, t, basis, purpose="meanfield")
    m_local = gate_averaging.build_local_moment_operator(distribution, t, kind, settings=run.settings)
    prediction = leading_coefficient(m_local, t, antisymmetric)

    payload = prediction.model_dump(mode="json")
    payload.update(universal=prediction.universal, basis=kind, provenance=run.provenance())
    write_json(out, payload)
    render_table(
        f"excitation bands, t={t}, {distribution.name}",
        ["band", "sigma", "minimum", "multiplicity"],
        [[band.kind, str(band.sigma), band.value, band.multiplicity] for band in prediction.bands],
    )
    return 0
