"""
The mc-validate command: Monte Carlo decay of a correlator against the exact gap.
"""

from pathlib import Path
from typing import Annotated, Optional

import typer

from moment_gap.api.components.gate_averaging.services import resolve_distribution
from moment_gap.api.middleware.provenance import current_run, provenance_middleware
from moment_gap.services.helper import parse_int_range
from moment_gap.services.output import render_table, write_csv, write_json
from .services import pauli_operator, validate_decay

MC_HEADER = ("depth", "mean", "stderr", "signal", "used_in_fit")


@provenance_middleware("mc-validate")
def mc_validate(
    t: Annotated[int, typer.Option("--t", help="Moment order.")] = 2,
    n: Annotated[int, typer.Option("--n", help="Number of qubits, at most 6.")] = 4,
    depths: Annotated[str, typer.Option("--depths", help="Depth grid, e.g. 1..60.")] = "1..60",
    replicas: Annotated[int, typer.Option("--replicas", help="Circuits per depth.")] = 20000,
    seed: Annotated[int, typer.Option("--seed", help="Master seed.")] = 7,
    dist: Annotated[str, typer.Option("--dist", help="haar-u4, a built-in gate set or a gate-set JSON file.")] = "haar-u4",
    basis: Annotated[str, typer.Option("--basis", help="Local basis of the exact computation.")] = "auto",
    operator: Annotated[
        Optional[str], typer.Option("--operator", help="Pauli string used on every copy; collective Z by default.")
    ] = None,
    out: Annotated[Path, typer.Option("--out", help="CSV output.")] = Path("mc.csv"),
    summary: Annotated[Optional[Path], typer.Option("--summary", help="JSON summary; next to the CSV by default.")] = None,
) -> int:
    """Fit the correlator decay rate and compare it with lambda1 of the exact sector."""
    run = current_run()
    factors = None if operator is None else [pauli_operator(operator)] * t
    fit = validate_decay(
        resolve_distribution(dist), t, n, parse_int_range(depths), replicas, seed, factors, basis=basis, settings=run.settings
    )
    rows = [
        {"depth": depth, "mean": mean, "stderr": stderr, "signal": signal, "used_in_fit": used}
        for depth, mean, stderr, signal, used in zip(fit.depths, fit.means, fit.stderrs, fit.signals, fit.used_in_fit)
    ]
    write_csv(out, MC_HEADER, rows)
    write_json(
        summary or out.with_suffix(".json"),
        {
            "amplitude": fit.amplitude,
            "burn_in": fit.burn_in,
            "ci": [fit.ci_low, fit.ci_high],
            "confidence": fit.confidence,
            "fixed_point_value": fit.means[0] - fit.signals[0],
            "gap": 1.0 - fit.reference_rate,
            "lambda1": fit.reference_rate,
            "rate": fit.rate,
            "rate_stderr": fit.rate_stderr,
            "subleading_rate": fit.subleading_rate,
            "twirl": fit.twirl,
            "verdict": "consistent" if fit.consistent else "inconsistent",
            "provenance": run.provenance(),
        },
    )
    render_table(
        f"decay fit, t={t}, n={n}",
        ["rate", "stderr", "lambda1", "verdict"],
        [[fit.rate, fit.rate_stderr, fit.reference_rate, "consistent" if fit.consistent else "inconsistent"]],
    )
    return 0 if fit.consistent else 2
