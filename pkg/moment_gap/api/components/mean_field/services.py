"""
This module computes the spin-wave (mean-field) expansion of the gap.

Around a product permutation state |sigma>>^(x n) a single excitation in the
direction of a local ket alpha orthogonal to |sigma>> costs, to leading order
in 1/n, the eigenvalues of
    E  = 2 (1 - <<sigma a| m |sigma b>> - <<sigma a| m |b sigma>>)   (symmetric band)
    E~ = 2 (1 - <<sigma a| m |sigma b>>)                             (antisymmetric band)
and the gap is a1 / n + O(1/n^2) with a1 the smallest eigenvalue over bands
and reference permutations.

Functions:
    excitation_matrix: E or E~ for one reference permutation.
    band_minimum: Smallest eigenvalue of an excitation matrix with its witness.
    leading_coefficient: a1 over every reference permutation.
    invariant_polynomial_check: <<I w| U^(x t, t) |I w>> for canonical gates against its bound.
    witness_non_invariance: Whether a fixed two-qubit rotation moves I x a + a x I.
    crossover_index: First row of a decreasing tail of relative deviations, at least 3 rows long.
    gap_prediction_vs_exact: Exact sector gaps against a1 / n.
"""

import logging
import math
from functools import reduce
from typing import List, Literal, Optional, Sequence

import numpy as np

from moment_gap.api.components.gate_averaging import services as gate_averaging
from moment_gap.api.components.gate_averaging.model import GateDistribution, LocalMomentOperator
from moment_gap.api.components.moment_space import services as moment_space
from moment_gap.api.components.moment_space.model import OperatorKet, PauliString, PermutationKet
from moment_gap.api.components.symmetric_sector import services as symmetric_sector
from moment_gap.config.settings import Settings, get_settings
from moment_gap.exceptions import (
    BasisMismatchError,
    InvalidArgumentError,
    NotFixedPointError,
    NotInvariantError,
)
from moment_gap.services.linalg import hermitize_inplace, orthonormal_complement, phase_fix, realify
from .model import (
    Band,
    BandMinimum,
    ExcitationMatrix,
    GapPrediction,
    GapScan,
    GapScanRow,
    PolynomialCheck,
    WitnessCheck,
)

logger = logging.getLogger(__name__)

FIXED_POINT_TOLERANCE = 1e-8
DEGENERACY_TOLERANCE = 1e-8
UNIVERSALITY_TOLERANCE = 1e-9
WITNESS_CUTOFF = 1e-9
MIN_TAIL_ROWS = 3

ROTATIONS = {
    "zz": (0.0, 0.0, math.pi / 4),
    "xx": (math.pi / 4, 0.0, 0.0),
}


def _sigma_tuple(sigma: PermutationKet | Sequence[int]) -> tuple:
    return sigma.sigma if isinstance(sigma, PermutationKet) else tuple(int(k) for k in sigma)


def _reference_coordinates(m_local: LocalMomentOperator, sigma: tuple) -> np.ndarray:
    ket = moment_space.permutation_ket(sigma, 2).ket.normalized()
    coordinates = m_local.basis.coordinates(ket)
    norm = float(np.linalg.norm(coordinates))
    if abs(norm - 1.0) > 1e-9:
        raise BasisMismatchError(f"permutation {sigma} is not in the span of the {m_local.basis.kind} basis")
    return coordinates / norm


def excitation_matrix(
    m_local: LocalMomentOperator,
    sigma: PermutationKet | Sequence[int],
    kind: Band = "symmetric_band",
) -> ExcitationMatrix:
    """
    Excitation matrix over the complement of the normalized |sigma>>.

    Parameters:
    m_local (LocalMomentOperator): Local moment operator; its ordered-pair average is used.
    sigma (PermutationKet | Sequence[int]): Reference permutation.
    kind (Band): "symmetric_band" for E or "antisymmetric_band" for E~.

    Returns:
    ExcitationMatrix: Hermitian matrix of side size - 1.

    Raises:
    NotFixedPointError: If |sigma sigma>> is not fixed by the local operator.
    """
    sigma = _sigma_tuple(sigma)
    if len(sigma) != m_local.t:
        raise InvalidArgumentError(f"permutation {sigma} does not act on {m_local.t} copies")
    symmetric = m_local.pair_symmetrized()
    reference = _reference_coordinates(symmetric, sigma)
    pair = np.kron(reference, reference)
    residual = float(np.linalg.norm(symmetric.matrix @ pair - pair))
    if residual > FIXED_POINT_TOLERANCE:
        raise NotFixedPointError(sigma, residual)

    coefficients = symmetric.coefficient_tensor()
    complement = orthonormal_complement(reference)
    direct = np.einsum("x,xyzw,z->yw", reference.conj(), coefficients, reference)
    block = complement.conj().T @ direct @ complement
    if kind == "symmetric_band":
        exchange = np.einsum("x,xyzw,w->yz", reference.conj(), coefficients, reference)
        block = block + complement.conj().T @ exchange @ complement
    elif kind != "antisymmetric_band":
        raise InvalidArgumentError(f"unknown band {kind!r}")
    matrix = np.ascontiguousarray(2.0 * (np.eye(complement.shape[1]) - block))
    hermitize_inplace(matrix)
    return ExcitationMatrix(
        kind=kind,
        sigma=sigma,
        matrix=realify(matrix),
        complement=complement,
        basis_kind=symmetric.basis.kind,
    )


def band_minimum(excitation: ExcitationMatrix, m_local: LocalMomentOperator) -> BandMinimum:
    """Smallest eigenvalue of an excitation matrix and a phase-fixed witness in Pauli strings."""
    values, vectors = np.linalg.eigh(excitation.matrix)
    value = float(values[0])
    multiplicity = int(np.sum(values <= value + DEGENERACY_TOLERANCE))
    local = excitation.complement @ vectors[:, 0]
    pauli = phase_fix(m_local.basis.pauli_coordinates @ local)
    if np.max(np.abs(pauli.imag)) > WITNESS_CUTOFF:
        logger.warning("witness for %s has complex Pauli coefficients; reporting real parts", excitation.sigma)
    labels = moment_space.pauli_labels(m_local.t)
    witness = {
        labels[index]: float(pauli[index].real)
        for index in np.flatnonzero(np.abs(pauli) > WITNESS_CUTOFF)
    }
    return BandMinimum(
        kind=excitation.kind, sigma=excitation.sigma, value=value, multiplicity=multiplicity, witness=witness
    )


def leading_coefficient(
    m_local: LocalMomentOperator,
    t: Optional[int] = None,
    include_antisymmetric: Optional[bool] = None,
) -> GapPrediction:
    """
    The leading coefficient a1 of the gap, minimized over bands and reference permutations.

    Parameters:
    m_local (LocalMomentOperator): Local moment operator.
    t (Optional[int]): Expected order, checked against the operator.
    include_antisymmetric (Optional[bool]): Whether the antisymmetric band enters a1;
        by default only when the distribution is not swap-invariant.

    Returns:
    GapPrediction: a1 with every band minimum examined.
    """
    if t is not None and t != m_local.t:
        raise InvalidArgumentError(f"operator has order {m_local.t}, requested t={t}")
    if include_antisymmetric is None:
        include_antisymmetric = not m_local.is_swap_invariant
    symmetric = m_local.pair_symmetrized()
    bands: List[BandMinimum] = []
    for sigma in moment_space.permutations_of(m_local.t):
        for kind in ("symmetric_band", "antisymmetric_band"):
            bands.append(band_minimum(excitation_matrix(symmetric, sigma, kind), symmetric))
    candidates = [
        band for band in bands if include_antisymmetric or band.kind == "symmetric_band"
    ]
    best = min(candidates, key=lambda band: band.value)
    restricted = m_local.basis.kind != "pauli"
    if best.value <= UNIVERSALITY_TOLERANCE:
        logger.warning(
            "a1 = %.3e for %s at t=%d: the distribution may be non-universal", best.value, m_local.distribution, m_local.t
        )
    logger.info(
        "a1 = %.12f for %s at t=%d from the %s at sigma=%s%s",
        best.value, m_local.distribution, m_local.t, best.kind, best.sigma,
        " (invariant subspace only)" if restricted else "",
    )
    return GapPrediction(
        a1=best.value,
        band=best.kind,
        sigma=best.sigma,
        witness=best.witness,
        multiplicity=best.multiplicity,
        bands=bands,
        antisymmetric_included=include_antisymmetric,
        restricted=restricted,
        t=m_local.t,
        distribution=m_local.distribution,
    )


def _check_invariant_direction(omega: OperatorKet) -> OperatorKet:
    if omega.local_dim != 2:
        raise InvalidArgumentError("omega must be an operator on t copies of one qubit")
    omega = omega.normalized()
    if not moment_space.is_u2_invariant(omega):
        raise NotInvariantError(f"omega fails the U(2) twirl test (residual {moment_space.u2_residual(omega):.3e})")
    identity = moment_space.pauli_string_ket((0,) * omega.t)
    overlap = abs(identity.inner(omega))
    if overlap > 1e-10:
        raise InvalidArgumentError(f"omega overlaps the identity ket by {overlap:.3e}")
    return omega


def invariant_polynomial_check(
    omega: OperatorKet,
    q: float,
    r: float,
    s: float,
    t: Optional[int] = None,
    term: Literal["direct", "exchange"] = "direct",
) -> PolynomialCheck:
    """
    Evaluate <<I w| U^(x t, t) |I w>> (direct) or <<I w| U^(x t, t) |w I>> (exchange)
    for U = exp{i(q XX + r YY + s ZZ)} against (x^2 + y^2 + z^2) / 3.

    The direct term uses x = cos2r cos2s, y = cos2s cos2q, z = cos2q cos2r and
    the exchange term the same products of sines.

    Parameters:
    omega (OperatorKet): U(2)-invariant ket orthogonal to the identity.
    q, r, s (float): Canonical angles.
    t (Optional[int]): Expected order, checked against omega.
    term (str): "direct" or "exchange".

    Returns:
    PolynomialCheck: The value and the bound.

    Raises:
    NotInvariantError: If omega is not U(2)-invariant.
    """
    omega = _check_invariant_direction(omega)
    if t is not None and omega.t != t:
        raise InvalidArgumentError(f"omega acts on {omega.t} copies, requested t={t}")
    transfer = gate_averaging.pauli_transfer_matrix(gate_averaging.canonical_gate(q, r, s)).entries
    if term == "direct":
        block = transfer[0:4, 0:4]
        x, y, z = (math.cos(2 * r) * math.cos(2 * s), math.cos(2 * s) * math.cos(2 * q), math.cos(2 * q) * math.cos(2 * r))
    elif term == "exchange":
        block = transfer[0:4, 0:16:4]
        x, y, z = (math.sin(2 * r) * math.sin(2 * s), math.sin(2 * s) * math.sin(2 * q), math.sin(2 * q) * math.sin(2 * r))
    else:
        raise InvalidArgumentError(f"unknown term {term!r}")
    coordinates = moment_space.pauli_coordinates(omega)
    power = reduce(np.kron, [block] * omega.t)
    value = complex(np.vdot(coordinates, power @ coordinates))
    if abs(value.imag) > 1e-10:
        raise InvalidArgumentError(f"polynomial value has imaginary part {value.imag:.3e}")
    return PolynomialCheck(term=term, lhs=value.real, bound=(x * x + y * y + z * z) / 3, x=x, y=y, z=z)


def witness_non_invariance(labels: str, generator: Literal["zz", "xx"] = "zz") -> WitnessCheck:
    """
    Distance between I x a + a x I and its image under exp(i pi/4 P x P)^(x t, t).

    For "zz" the witness moves whenever some label is X or Y; for "xx" whenever
    some label is Y or Z.

    Parameters:
    labels (str): Pauli string a on t copies, e.g. "XIZ".
    generator (str): "zz" or "xx".

    Returns:
    WitnessCheck: The distance and whether the rule predicts a change.
    """
    if generator not in ROTATIONS:
        raise InvalidArgumentError(f"unknown generator {generator!r}; use zz or xx")
    string = PauliString.from_label(labels)
    index, t = string.index, string.t
    side = 4**t
    vector = np.zeros(side * side)
    vector[index] += 1.0
    vector[index * side] += 1.0
    transfer = gate_averaging.pauli_transfer_matrix(gate_averaging.canonical_gate(*ROTATIONS[generator])).tensor()
    image = gate_averaging.apply_pair_transfer(transfer, vector, t)
    moving = {"zz": "XY", "xx": "YZ"}[generator]
    return WitnessCheck(
        labels=labels.upper(),
        generator=generator,
        applicable=any(letter in moving for letter in labels.upper()),
        difference=float(np.linalg.norm(image - vector)),
    )


def crossover_index(rel_devs: Sequence[float], min_rows: int = MIN_TAIL_ROWS) -> Optional[int]:
    """
    Smallest index from which the sequence decreases strictly to its end.

    None when that tail is shorter than min(min_rows, len(rel_devs)), so a
    scan ending on a rise has no crossover.
    """
    if not rel_devs:
        return None
    index = len(rel_devs) - 1
    while index > 0 and rel_devs[index] < rel_devs[index - 1]:
        index -= 1
    if len(rel_devs) - index < min(min_rows, len(rel_devs)):
        return None
    return index


def gap_prediction_vs_exact(
    dist: GateDistribution,
    t: int,
    n_list: Sequence[int],
    basis: str = "auto",
    settings: Settings | None = None,
    include_antisymmetric: Optional[bool] = None,
) -> GapScan:
    """
    Exact symmetric-sector gaps against the mean-field prediction a1 / n.

    Parameters:
    dist (GateDistribution): The averaged distribution.
    t (int): Moment order.
    n_list (Sequence[int]): Qubit counts, each at least 2.
    basis (str): "auto", "invariant" or "full".
    settings (Settings | None): Caps and solver knobs.
    include_antisymmetric (Optional[bool]): Passed to leading_coefficient.

    Returns:
    GapScan: Rows sorted by n with the crossover and tail slope.
    """
    settings = settings or get_settings()
    sizes = sorted(set(int(n) for n in n_list))
    if not sizes or sizes[0] < 2:
        raise InvalidArgumentError(f"qubit counts must be at least 2, got {list(n_list)}")
    kind = gate_averaging.choose_local_basis(dist, t, basis, "sector")
    m_local = gate_averaging.build_local_moment_operator(dist, t, kind, settings=settings)
    prediction = leading_coefficient(m_local, t, include_antisymmetric)

    rows: List[GapScanRow] = []
    for n in sizes:
        result = symmetric_sector.sector_spectral_gap(m_local, n, settings)
        predicted = prediction.predicted_gap(n)
        rel_dev = abs(result.gap / predicted - 1.0) if prediction.universal else math.inf
        rows.append(
            GapScanRow(
                n=n,
                dim=result.dimension,
                unit_multiplicity=result.unit_multiplicity,
                lambda1=result.lambda1,
                gap=result.gap,
                meanfield_prediction=predicted,
                rel_dev=rel_dev,
            )
        )
        logger.info("n=%d dim=%d gap=%.12f prediction=%.12f rel_dev=%.3e", n, result.dimension, result.gap, predicted, rel_dev)

    crossover = crossover_index([row.rel_dev for row in rows])
    tail = rows[crossover:] if crossover is not None else []
    tail_slope = None
    if len(tail) >= 2:
        tail_slope = float(np.polyfit([row.n for row in tail], [1.0 / row.gap for row in tail], 1)[0])
    return GapScan(
        distribution=dist.name,
        t=t,
        basis_kind=kind,
        prediction=prediction,
        rows=rows,
        crossover_n=rows[crossover].n if crossover is not None else None,
        tail_slope=tail_slope,
    )
