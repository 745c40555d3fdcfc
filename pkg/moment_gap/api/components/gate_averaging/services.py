"""
This module builds the averaged two-site superoperator m_t.

Haar-on-U(4) averages use the fact that m_t is the orthogonal projector onto
the span of the two-site permutation kets |sigma>> x |sigma>>, inverted
through the exact integer Gram matrix. Finite gate sets factorize through the
16 x 16 Pauli transfer matrices, one factor per copy.

Functions:
    pauli_transfer_matrix: Pauli transfer matrix of a two-qubit unitary.
    canonical_gate: exp{i(q XX + r YY + s ZZ)}.
    haar_unitary: Batched Haar-random U(4) sampler.
    swap_conjugate_gate: SWAP U SWAP.
    haar_u4: The Haar distribution.
    finite_distribution: A validated, dagger-symmetrized finite set.
    load_gate_set, resolve_distribution: Distributions from gate-set files or names.
    dagger_symmetrize: Union of a gate set with its inverses.
    haar_m_element: One matrix element of the Haar average.
    build_local_moment_operator: m_t over a local basis pair.
    choose_local_basis: Resolve a basis request against a distribution.
    apply_pair_transfer: Apply one gate's t-fold transfer matrix to a two-site Pauli vector.
"""

import logging
import string
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import linalg

from moment_gap.api.components.moment_space import services as moment_space
from moment_gap.api.components.moment_space.model import LocalBasis, OperatorKet
from moment_gap.config.settings import Settings, get_settings
from moment_gap.exceptions import (
    BasisMismatchError,
    DimensionCapError,
    GateSetError,
    InvalidArgumentError,
    NonUnitaryGateError,
    ToleranceError,
    UnsupportedDistributionError,
)
from moment_gap.services.linalg import hermitize_inplace
from .model import GateDistribution, LocalMomentOperator, PauliTransferMatrix
from .repository import GateSetRepository

logger = logging.getLogger(__name__)

UNITARY_TOLERANCE = 1e-10
WEIGHT_TOLERANCE = 1e-12
MERGE_TOLERANCE = 1e-12
MAX_HAAR_ORDER = 4

PAULI_PAIRS = np.stack(
    [np.kron(moment_space.PAULIS[p], moment_space.PAULIS[q]) for p in range(4) for q in range(4)]
)
SWAP = np.eye(4)[[0, 2, 1, 3]]
FINGERPRINT = np.exp(1j * np.arange(16)).reshape(4, 4)
BUCKET_WIDTH = 1e-6


def unitarity_defect(gate: np.ndarray) -> float:
    gate = np.asarray(gate)
    return float(np.max(np.abs(gate @ gate.conj().T - np.eye(gate.shape[0]))))


def _check_unitary(gate: np.ndarray, index: int | None = None) -> np.ndarray:
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (4, 4):
        raise GateSetError(f"two-qubit gates must be 4x4, got shape {gate.shape}")
    defect = unitarity_defect(gate)
    if defect > UNITARY_TOLERANCE:
        raise NonUnitaryGateError(defect, UNITARY_TOLERANCE, index)
    return gate


def pauli_transfer_matrix(unitary: np.ndarray) -> PauliTransferMatrix:
    """
    Pauli transfer matrix of a two-qubit unitary.

    Parameters:
    unitary (np.ndarray): 4 x 4 unitary.

    Returns:
    PauliTransferMatrix: R with R[k', k] = tr(P_k' U P_k U^+) / 4, k = 4p + q.

    Raises:
    NonUnitaryGateError: If U is not unitary within 1e-10.
    """
    gate = _check_unitary(unitary)
    conjugated = gate @ PAULI_PAIRS @ gate.conj().T
    entries = np.einsum("aij,bji->ab", PAULI_PAIRS, conjugated).real / 4
    return PauliTransferMatrix(entries=entries)


def transfer_stack(gates: np.ndarray) -> np.ndarray:
    """Pauli transfer tensors [g, p', q', p, q] of a stack of unitaries, without validation."""
    conjugated = np.einsum("gij,kjl,gml->gkim", gates, PAULI_PAIRS, gates.conj())
    entries = np.einsum("aij,gbji->gab", PAULI_PAIRS, conjugated).real / 4
    return entries.reshape(-1, 4, 4, 4, 4)


def canonical_gate(q: float, r: float, s: float) -> np.ndarray:
    """exp{i(q XX + r YY + s ZZ)}."""
    generator = q * PAULI_PAIRS[5] + r * PAULI_PAIRS[10] + s * PAULI_PAIRS[15]
    return linalg.expm(1j * generator)


def haar_unitary(rng: np.random.Generator, size: int, dimension: int = 4) -> np.ndarray:
    """
    Haar-random U(dimension) matrices from the QR decomposition of complex Gaussians.

    Parameters:
    rng (np.random.Generator): Random source.
    size (int): Number of matrices.
    dimension (int): Matrix side, 4 for two-qubit gates.

    Returns:
    np.ndarray: Stack of shape (size, dimension, dimension).
    """
    shape = (size, dimension, dimension)
    gaussian = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    q, r = np.linalg.qr(gaussian)
    diagonal = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diagonal / np.abs(diagonal))[:, None, :]


def swap_conjugate_gate(gates: np.ndarray) -> np.ndarray:
    return SWAP @ gates @ SWAP


def haar_u4() -> GateDistribution:
    return GateDistribution(kind="haar_u4", name="haar-u4", dagger_symmetrized=True)


def _bucket_key(gate: np.ndarray) -> int:
    # gates within 1e-10 entrywise land in the same or an adjacent bucket
    return int(np.floor(np.real(np.vdot(FINGERPRINT, gate)) / BUCKET_WIDTH))


def _nearby(lookup: Dict[int, List[int]], gate: np.ndarray) -> List[int]:
    key = _bucket_key(gate)
    return [index for neighbour in (key - 1, key, key + 1) for index in lookup.get(neighbour, [])]


def dagger_symmetrize(gates: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Union of the gates and their inverses with halved weights.

    Gates closer than 1e-12 entrywise are merged. Candidates are bucketed by a
    scalar fingerprint and compared exactly against their own and the two
    adjacent buckets.

    Parameters:
    gates (np.ndarray): Stack of shape (m, 4, 4).
    weights (np.ndarray): Probabilities of shape (m,).

    Returns:
    Tuple[np.ndarray, np.ndarray]: The merged gates and weights.
    """
    candidates = np.concatenate([gates, np.conj(np.transpose(gates, (0, 2, 1)))])
    halves = np.concatenate([weights, weights]) / 2
    buckets: Dict[int, List[int]] = {}
    merged_gates: List[np.ndarray] = []
    merged_weights: List[float] = []
    for gate, weight in zip(candidates, halves):
        for index in _nearby(buckets, gate):
            if np.max(np.abs(merged_gates[index] - gate)) < MERGE_TOLERANCE:
                merged_weights[index] += weight
                break
        else:
            buckets.setdefault(_bucket_key(gate), []).append(len(merged_gates))
            merged_gates.append(gate)
            merged_weights.append(float(weight))
    return np.stack(merged_gates), np.array(merged_weights)


def _is_dagger_closed(gates: np.ndarray, weights: np.ndarray) -> bool:
    lookup: Dict[int, List[int]] = {}
    for index, gate in enumerate(gates):
        lookup.setdefault(_bucket_key(gate), []).append(index)

    def weight_of(target: np.ndarray) -> float:
        return sum(
            float(weights[index])
            for index in _nearby(lookup, target)
            if np.max(np.abs(gates[index] - target)) < UNITARY_TOLERANCE
        )

    return all(
        abs(weight_of(gate) - weight_of(gate.conj().T)) <= WEIGHT_TOLERANCE for gate in gates
    )


def finite_distribution(
    gates: Sequence[np.ndarray] | np.ndarray,
    weights: Sequence[float] | np.ndarray | None = None,
    name: str = "finite-set",
    symmetric: bool = False,
) -> GateDistribution:
    """
    Validate a weighted gate set and make it dagger-symmetric.

    Parameters:
    gates (Sequence[np.ndarray]): Two-qubit unitaries.
    weights (Sequence[float] | None): Probabilities; uniform when omitted.
    name (str): Display name.
    symmetric (bool): Declare the set already closed under inverses; this is verified.

    Returns:
    GateDistribution: A finite-set distribution with dagger_symmetrized True.

    Raises:
    NonUnitaryGateError: If a gate is not unitary within 1e-10.
    GateSetError: If weights are negative, do not sum to 1, or a declared-symmetric set is not.
    """
    stack = np.stack([_check_unitary(gate, index) for index, gate in enumerate(gates)])
    if weights is None:
        probabilities = np.full(stack.shape[0], 1.0 / stack.shape[0])
    else:
        probabilities = np.asarray(weights, dtype=float)
    if probabilities.shape != (stack.shape[0],):
        raise GateSetError(f"{stack.shape[0]} gates but {probabilities.size} weights")
    if np.any(probabilities < 0):
        raise GateSetError("weights must be non-negative")
    total = float(probabilities.sum())
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise GateSetError(f"weights sum to {total!r}, not 1 within {WEIGHT_TOLERANCE}")
    if symmetric:
        if not _is_dagger_closed(stack, probabilities):
            raise GateSetError(f"gate set {name!r} is declared symmetric but is not closed under inverses")
    else:
        before = stack.shape[0]
        stack, probabilities = dagger_symmetrize(stack, probabilities)
        logger.debug("dagger symmetrization of %s: %d -> %d gates", name, before, stack.shape[0])
    return GateDistribution(
        kind="finite_set", name=name, gates=stack, weights=probabilities, dagger_symmetrized=True
    )


def load_gate_set(source: str, repository: GateSetRepository | None = None) -> GateDistribution:
    repository = repository or GateSetRepository()
    document = repository.read(source)
    return finite_distribution(
        repository.matrices(document),
        repository.weights(document),
        name=document.name,
        symmetric=document.symmetric,
    )


def resolve_distribution(source: str, repository: GateSetRepository | None = None) -> GateDistribution:
    """
    Map a command-line gate argument to a distribution.

    Parameters:
    source (str): "haar-u4", a built-in set name, or a gate-set file path.
    repository (GateSetRepository | None): Where gate-set files are read from.

    Returns:
    GateDistribution: The requested distribution.
    """
    if source in ("haar-u4", "haar"):
        return haar_u4()
    distribution = load_gate_set(source, repository)
    logger.info("loaded gate set %s with %d gates", distribution.name, distribution.size)
    return distribution


def _two_site_overlaps(bra_pair: Tuple[OperatorKet, OperatorKet], t: int) -> np.ndarray:
    group = moment_space.permutations_of(t)
    columns = moment_space.permutation_ket_matrix(t, 2)
    first = np.array([np.vdot(bra_pair[0].coefficients, columns[:, index]) for index in range(len(group))])
    second = np.array([np.vdot(bra_pair[1].coefficients, columns[:, index]) for index in range(len(group))])
    return first * second


def _pair_gram_inverse(t: int) -> np.ndarray:
    if t > MAX_HAAR_ORDER:
        raise UnsupportedDistributionError(
            f"Haar averaging on U(4) needs t <= {MAX_HAAR_ORDER} (got {t}) for an invertible Gram matrix"
        )
    try:
        inverse = np.linalg.inv(moment_space.gram_matrix(t, 4))
    except np.linalg.LinAlgError as exc:
        raise UnsupportedDistributionError(f"two-site Gram matrix of order {t} is singular") from exc
    return 0.5 * (inverse + inverse.T)


def haar_m_element(
    t: int,
    bra_pair: Tuple[OperatorKet, OperatorKet],
    ket_pair: Tuple[OperatorKet, OperatorKet],
) -> complex:
    """
    <<bra| m_t |ket>> for the Haar measure on U(4).

    m_t is the projector sum_{sigma,tau} |sigma^(2)>> (G^-1)_{sigma tau} <<tau^(2)|,
    and the overlaps of a product pair ket with |sigma>> x |sigma>> factorize by site.

    Parameters:
    t (int): Moment order, at most 4.
    bra_pair (Tuple[OperatorKet, OperatorKet]): Single-site kets on the two sites.
    ket_pair (Tuple[OperatorKet, OperatorKet]): Single-site kets on the two sites.

    Returns:
    complex: The matrix element.
    """
    inverse = _pair_gram_inverse(t)
    left = _two_site_overlaps(bra_pair, t)
    right = np.conj(_two_site_overlaps(ket_pair, t))
    return complex(left @ inverse @ right)


def _check_entry_cap(size: int, settings: Settings) -> None:
    entries = size**4
    if entries > settings.local_entry_cap:
        raise DimensionCapError(f"local moment matrix over {size} basis kets", entries, settings.local_entry_cap)


def _haar_matrix(t: int, basis: LocalBasis) -> np.ndarray:
    inverse = _pair_gram_inverse(t)
    overlaps = basis.vectors.conj().T @ moment_space.permutation_ket_matrix(t, 2)
    size = basis.size
    pair_overlaps = (overlaps[:, None, :] * overlaps[None, :, :]).reshape(size * size, -1)
    return (pair_overlaps @ inverse) @ pair_overlaps.conj().T


def _reordered_power(transfer: np.ndarray, t: int) -> np.ndarray:
    """R^(x t) with axes rearranged to [p'_1..p'_t, q'_1..q'_t, p_1..p_t, q_1..q_t]."""
    power = transfer
    for _ in range(t - 1):
        power = np.multiply.outer(power, transfer)
    axes = [4 * copy + slot for slot in range(4) for copy in range(t)]
    return power.transpose(axes).reshape(16**t, 16**t)


def _restricted_expression(t: int) -> str:
    letters = iter(string.ascii_letters)
    out_p = [next(letters) for _ in range(t)]
    out_q = [next(letters) for _ in range(t)]
    in_p = [next(letters) for _ in range(t)]
    in_q = [next(letters) for _ in range(t)]
    alpha, gamma, beta, delta = (next(letters) for _ in range(4))
    operands = ["".join(out_p) + alpha, "".join(out_q) + gamma]
    operands += [out_p[copy] + out_q[copy] + in_p[copy] + in_q[copy] for copy in range(t)]
    operands += ["".join(in_p) + beta, "".join(in_q) + delta]
    return ",".join(operands) + "->" + alpha + gamma + beta + delta


def _finite_matrix(dist: GateDistribution, t: int, basis: LocalBasis) -> np.ndarray:
    transfers = transfer_stack(np.asarray(dist.gates))
    size = basis.size
    if basis.kind == "pauli":
        total = np.zeros((size * size, size * size))
        for weight, transfer in zip(dist.weights, transfers):
            total += weight * _reordered_power(transfer, t)
        return total
    coordinates = basis.pauli_tensor()
    expression = _restricted_expression(t)
    total = np.zeros((size, size, size, size), dtype=complex)
    for weight, transfer in zip(dist.weights, transfers):
        operands = [coordinates.conj(), coordinates.conj()] + [transfer] * t + [coordinates, coordinates]
        total += weight * np.einsum(expression, *operands, optimize="greedy")
    return total.reshape(size * size, size * size)


def build_local_moment_operator(
    dist: GateDistribution,
    t: int,
    basis: LocalBasis | str = "pauli",
    quadrature_samples: int | None = None,
    settings: Settings | None = None,
) -> LocalMomentOperator:
    """
    Average U^(x t, t) over a two-qubit gate distribution in a local basis pair.

    Parameters:
    dist (GateDistribution): Haar on U(4) or a dagger-symmetrized finite set.
    t (int): Moment order.
    basis (LocalBasis | str): A LocalBasis or its kind, "pauli" or "u2_invariant".
    quadrature_samples (int | None): Reserved for continuous non-Haar distributions; must be None.
    settings (Settings | None): Caps to enforce.

    Returns:
    LocalMomentOperator: The Hermitian-symmetrized matrix with its asymmetry diagnostic.

    Raises:
    UnsupportedDistributionError: For Haar with t > 4 or a non-symmetrized finite set,
        and whenever quadrature_samples is given.
    DimensionCapError: If the dense matrix would exceed the entry cap.
    """
    settings = settings or get_settings()
    if t < 1:
        raise InvalidArgumentError(f"order t must be positive, got {t}")
    if isinstance(basis, str):
        basis = moment_space.local_basis(t, basis)
    if basis.t != t:
        raise InvalidArgumentError(f"basis is for t={basis.t}, requested t={t}")
    _check_entry_cap(basis.size, settings)
    if quadrature_samples is not None:
        raise UnsupportedDistributionError(
            f"{dist.name!r} is averaged exactly; quadrature_samples={quadrature_samples} has no meaning for it"
        )

    if dist.kind == "haar_u4":
        matrix = _haar_matrix(t, basis)
    elif dist.kind == "finite_set":
        if not dist.dagger_symmetrized:
            raise UnsupportedDistributionError(f"finite set {dist.name!r} is not dagger-symmetrized")
        matrix = _finite_matrix(dist, t, basis)
    else:
        raise UnsupportedDistributionError(f"unsupported distribution kind {dist.kind!r}")

    matrix = np.ascontiguousarray(matrix)
    try:
        asymmetry = hermitize_inplace(matrix)
    except ToleranceError:
        logger.error("local moment operator for %s at t=%d is not Hermitian", dist.name, t)
        raise
    if asymmetry > 1e-12:
        logger.warning("corrected Hermitian asymmetry %.2e in m_%d for %s", asymmetry, t, dist.name)
    logger.info("built m_%d for %s over %d %s kets", t, dist.name, basis.size, basis.kind)
    return LocalMomentOperator(t=t, basis=basis, matrix=matrix, distribution=dist.name, asymmetry=asymmetry)


def apply_pair_transfer(transfer: np.ndarray, vector: np.ndarray, t: int) -> np.ndarray:
    """
    Apply R^(x t) to a two-site vector in Pauli coordinates.

    Parameters:
    transfer (np.ndarray): Pauli transfer tensor [p', q', p, q].
    vector (np.ndarray): Coordinates of length 16^t, index (alpha, gamma) -> alpha * 4^t + gamma.
    t (int): Moment order.

    Returns:
    np.ndarray: The image in the same coordinates.
    """
    state = np.asarray(vector).reshape((4,) * (2 * t))
    for copy in range(t):
        state = np.tensordot(transfer, state, axes=([2, 3], [copy, t + copy]))
        state = np.moveaxis(state, [0, 1], [copy, t + copy])
    return state.reshape(-1)


def choose_local_basis(dist: GateDistribution, t: int, requested: str = "auto", purpose: str = "sector") -> str:
    """
    Resolve "auto", "invariant" or "full" to a local basis kind.

    The invariant subspace is closed under m_t only for locally invariant
    distributions. Automatic sector scans use it for Haar; automatic
    mean-field scans use the full basis up to t = 3.

    Parameters:
    dist (GateDistribution): The averaged distribution.
    t (int): Moment order.
    requested (str): "auto", "invariant" or "full".
    purpose (str): "sector" or "meanfield".

    Returns:
    str: "pauli" or "u2_invariant".

    Raises:
    BasisMismatchError: If the invariant basis is requested for a distribution that does not preserve it.
    """
    if requested not in ("auto", "invariant", "full"):
        raise InvalidArgumentError(f"unknown basis {requested!r}; use auto, invariant or full")
    if requested == "full":
        return "pauli"
    if requested == "invariant":
        if not dist.is_locally_invariant:
            raise BasisMismatchError(
                f"the invariant basis is not preserved by {dist.name!r}; use --basis full"
            )
        return "u2_invariant"
    if purpose == "meanfield":
        return "pauli" if t <= 3 else "u2_invariant"
    return "u2_invariant" if dist.is_locally_invariant else "pauli"
