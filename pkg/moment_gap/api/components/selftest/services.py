"""
Property suite over the local and sector constructions.

Each check computes one identity the moment operators must satisfy and
reports the worst deviation it saw; a check that raises a domain error is
recorded as failed with the error message.

Functions:
    rotation_table_check: Pauli transfer of exp(i pi/4 ZZ) against the Clifford rule.
    fixed_point_check: Permutation products are fixed by the sector matrix.
    brute_force_check: Sector spectrum inside the full-space spectrum at n = 3.
    polynomial_bound_check: Canonical-gate bound over an angle grid.
    leading_coefficient_check: a1 > 0 for a distribution.
    t_independence_check: a1(t) = a1(2) for Haar.
    witness_check: The non-invariance rule for both fixed rotations.
    run_property_suite: Every check up to t_max.
"""

import logging
import math
from typing import Callable, List

import numpy as np
from scipy import linalg

from moment_gap.api.components.gate_averaging import services as gate_averaging
from moment_gap.api.components.gate_averaging.model import GateDistribution
from moment_gap.api.components.mean_field import services as mean_field
from moment_gap.api.components.moment_space import services as moment_space
from moment_gap.api.components.symmetric_sector import services as symmetric_sector
from moment_gap.config.settings import Settings, get_settings
from moment_gap.exceptions import InvalidArgumentError, MomentGapError
from .model import SelfTestCheck, SelfTestReport

logger = logging.getLogger(__name__)

TABLE_TOLERANCE = 1e-12
FIXED_TOLERANCE = 1e-9
SPECTRUM_TOLERANCE = 1e-9
BOUND_TOLERANCE = 1e-9
EQUALITY_TOLERANCE = 1e-10
INDEPENDENCE_TOLERANCE = 1e-8
GRID_POINTS = 10
MAX_SUITE_ORDER = 4


def rotation_table_check() -> SelfTestCheck:
    generator = gate_averaging.PAULI_PAIRS[15]
    expected = np.zeros((16, 16))
    for column, pauli in enumerate(gate_averaging.PAULI_PAIRS):
        commutes = np.allclose(pauli @ generator, generator @ pauli)
        image = pauli if commutes else 1j * generator @ pauli
        expected[:, column] = [np.trace(row @ image).real / 4 for row in gate_averaging.PAULI_PAIRS]
    transfer = gate_averaging.pauli_transfer_matrix(gate_averaging.canonical_gate(0.0, 0.0, np.pi / 4))
    deviation = float(np.max(np.abs(transfer.entries - expected)))
    return SelfTestCheck(
        name="rotation_table", passed=deviation <= TABLE_TOLERANCE, value=deviation, tolerance=TABLE_TOLERANCE
    )


def fixed_point_check(t: int, n_max: int = 8, settings: Settings | None = None) -> SelfTestCheck:
    settings = settings or get_settings()
    m_local = gate_averaging.build_local_moment_operator(gate_averaging.haar_u4(), t, "u2_invariant", settings=settings)
    worst, ranks = 0.0, set()
    for n in range(2, n_max + 1):
        matrix = symmetric_sector.assemble_symmetric_moment_matrix(m_local, n, settings=settings)
        stack = np.stack(symmetric_sector.permutation_fixed_vectors(m_local.basis, matrix.basis), axis=1)
        stack = stack / np.linalg.norm(stack, axis=0)
        worst = max(worst, float(np.max(np.linalg.norm(matrix.matmat(stack) - stack, axis=0))))
        ranks.add(linalg.orth(stack).shape[1])
    expected = math.factorial(t)
    return SelfTestCheck(
        name="fixed_points",
        t=t,
        passed=worst <= FIXED_TOLERANCE and ranks == {expected},
        value=worst,
        tolerance=FIXED_TOLERANCE,
        detail=f"n = 2..{n_max}, unit multiplicity {sorted(ranks)} (expected {expected})",
    )


def brute_force_check(t: int, settings: Settings | None = None) -> SelfTestCheck:
    settings = settings or get_settings()
    m_local = gate_averaging.build_local_moment_operator(gate_averaging.haar_u4(), t, "u2_invariant", settings=settings)
    sector = symmetric_sector.assemble_symmetric_moment_matrix(m_local, 3, settings=settings).to_dense()
    full = symmetric_sector.brute_force_moment_operator(m_local, 3, settings)
    inner = np.linalg.eigvalsh(0.5 * (sector + sector.conj().T))
    outer = np.linalg.eigvalsh(0.5 * (full + full.conj().T))
    worst = float(max(np.min(np.abs(outer - value)) for value in inner))
    return SelfTestCheck(
        name="brute_force_spectrum", t=t, passed=worst <= SPECTRUM_TOLERANCE, value=worst, tolerance=SPECTRUM_TOLERANCE
    )


def polynomial_bound_check(t: int, points: int = GRID_POINTS) -> SelfTestCheck:
    """lhs <= (x^2 + y^2 + z^2) / 3 on a points^3 grid, with equality for t = 2."""
    grid = np.linspace(-np.pi, np.pi, points)
    excess, slack = -np.inf, 0.0
    for omega in moment_space.u2_invariant_basis(t)[1:]:
        for q in grid:
            for r in grid:
                for s in grid:
                    for term in ("direct", "exchange"):
                        check = mean_field.invariant_polynomial_check(omega, q, r, s, t, term)
                        excess = max(excess, check.lhs - check.bound)
                        slack = max(slack, abs(check.lhs - check.bound))
    passed = excess <= BOUND_TOLERANCE and (t != 2 or slack <= EQUALITY_TOLERANCE)
    return SelfTestCheck(
        name="polynomial_bound",
        t=t,
        passed=bool(passed),
        value=float(excess),
        tolerance=BOUND_TOLERANCE,
        detail=f"{points}^3 canonical angles, both terms",
    )


def leading_coefficient_check(dist: GateDistribution, t: int = 2, settings: Settings | None = None) -> SelfTestCheck:
    kind = gate_averaging.choose_local_basis(dist, t, "auto", "meanfield")
    m_local = gate_averaging.build_local_moment_operator(dist, t, kind, settings=settings)
    prediction = mean_field.leading_coefficient(m_local, t)
    return SelfTestCheck(
        name="a1_positive",
        t=t,
        passed=prediction.universal,
        value=prediction.a1,
        tolerance=mean_field.UNIVERSALITY_TOLERANCE,
        detail=dist.name,
    )


def t_independence_check(t: int, settings: Settings | None = None) -> SelfTestCheck:
    haar = gate_averaging.haar_u4()
    values = []
    for order in (2, t):
        kind = gate_averaging.choose_local_basis(haar, order, "auto", "meanfield")
        m_local = gate_averaging.build_local_moment_operator(haar, order, kind, settings=settings)
        values.append(mean_field.leading_coefficient(m_local, order).a1)
    deviation = abs(values[1] - values[0])
    return SelfTestCheck(
        name="t_independence",
        t=t,
        passed=deviation <= INDEPENDENCE_TOLERANCE,
        value=deviation,
        tolerance=INDEPENDENCE_TOLERANCE,
        detail=f"a1(2) = {values[0]:.12f}, a1({t}) = {values[1]:.12f}",
    )


def witness_check(generator: str) -> SelfTestCheck:
    results = [mean_field.witness_non_invariance(labels, generator) for labels in moment_space.pauli_labels(2)[1:]]
    mismatched = [result.labels for result in results if result.changed != result.applicable]
    return SelfTestCheck(
        name=f"witness_{generator}",
        t=2,
        passed=not mismatched,
        value=float(len(mismatched)),
        detail=", ".join(mismatched),
    )


def _guarded(name: str, t: int | None, check: Callable[[], SelfTestCheck]) -> SelfTestCheck:
    try:
        result = check()
    except MomentGapError as exc:
        logger.error("check %s (t=%s) raised: %s", name, t, exc)
        return SelfTestCheck(name=name, t=t, passed=False, detail=str(exc))
    log = logger.info if result.passed else logger.warning
    log("check %s (t=%s): %s, value %s", name, t, "pass" if result.passed else "FAIL", result.value)
    return result


def run_property_suite(t_max: int = 3, settings: Settings | None = None) -> SelfTestReport:
    """
    Run every property check for orders 2..t_max.

    Parameters:
    t_max (int): Largest moment order, 2 to 4.
    settings (Settings | None): Caps and solver knobs.

    Returns:
    SelfTestReport: All checks in run order.
    """
    if not 2 <= t_max <= MAX_SUITE_ORDER:
        raise InvalidArgumentError(f"t_max must lie in 2..{MAX_SUITE_ORDER}, got {t_max}")
    settings = settings or get_settings()
    plan: List[tuple] = [("rotation_table", None, rotation_table_check)]
    for t in range(2, t_max + 1):
        plan.append(("fixed_points", t, lambda t=t: fixed_point_check(t, 8 if t <= 3 else 5, settings)))
        if t <= 3:
            plan.append(("brute_force_spectrum", t, lambda t=t: brute_force_check(t, settings)))
        plan.append(("polynomial_bound", t, lambda t=t: polynomial_bound_check(t)))
        if t > 2:
            plan.append(("t_independence", t, lambda t=t: t_independence_check(t, settings)))
    plan.append(("a1_positive", 2, lambda: leading_coefficient_check(gate_averaging.haar_u4(), 2, settings)))
    plan.append(
        ("a1_positive", 2, lambda: leading_coefficient_check(gate_averaging.resolve_distribution("clifford-t"), 2, settings))
    )
    for generator in ("zz", "xx"):
        plan.append((f"witness_{generator}", 2, lambda generator=generator: witness_check(generator)))
    checks = [_guarded(name, t, check) for name, t, check in plan]
    return SelfTestReport(t_max=t_max, checks=checks)
