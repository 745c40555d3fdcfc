"""
This module provides the algebra of the local moment space.

Permutations are zero-based one-line tuples enumerated in lexicographic
order, which fixes the ordering of every permutation-indexed object.

Functions:
    permutations_of: All permutations of t elements in lexicographic order.
    cycle_count: Number of cycles of a permutation.
    permutation_ket: Dense vectorized permutation operator.
    permutation_ket_matrix: All permutation kets of order t as columns.
    gram_matrix: Overlaps <<sigma|tau>> = d^cycles(sigma^-1 tau).
    permutation_overlap: <<A_1 x ... x A_t|sigma>> by cycle-factorized traces.
    pauli_basis: Normalized Pauli-string kets as columns.
    pauli_string_ket: One normalized Pauli-string ket.
    degree_component: Projection of a ket onto Pauli strings of one degree.
    is_u2_invariant: Lie-algebra test for invariance under U^(x t) conjugation.
    twirl_residual: |U^(x t) A U^+(x t) - A| for one unitary.
    u2_invariant_basis: Orthonormal, degree-graded basis of the U(2) commutant.
    local_basis: The full Pauli or the invariant local basis as a LocalBasis.
    pair_ket: Two-site ket |A>> x |C>> in the qubit-pair copy convention.
"""

import itertools
import logging
import math
from functools import lru_cache, reduce
from typing import List, Sequence, Tuple

import numpy as np

from moment_gap.config.settings import Settings, get_settings
from moment_gap.exceptions import DimensionCapError, InvalidArgumentError, ToleranceError
from moment_gap.services.linalg import phase_fix
from .model import LocalBasis, OperatorKet, PauliString, PermutationKet

logger = logging.getLogger(__name__)

PAULIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
PAULIS.flags.writeable = False

GRAM_NULL_TOLERANCE = 1e-9
INVARIANCE_TOLERANCE = 1e-10


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def permutations_of(t: int) -> List[Tuple[int, ...]]:
    return list(itertools.permutations(range(t)))


def inverse(sigma: Sequence[int]) -> Tuple[int, ...]:
    result = [0] * len(sigma)
    for position, image in enumerate(sigma):
        result[image] = position
    return tuple(result)


def compose(first: Sequence[int], second: Sequence[int]) -> Tuple[int, ...]:
    """(first o second)(k) = first(second(k))."""
    return tuple(first[image] for image in second)


def cycles(sigma: Sequence[int]) -> List[List[int]]:
    seen = [False] * len(sigma)
    result = []
    for start in range(len(sigma)):
        if seen[start]:
            continue
        cycle = []
        position = start
        while not seen[position]:
            seen[position] = True
            cycle.append(position)
            position = sigma[position]
        result.append(cycle)
    return result


def cycle_count(sigma: Sequence[int]) -> int:
    return len(cycles(sigma))


def catalan(t: int) -> int:
    return math.comb(2 * t, t) // (t + 1)


def _check_dense_order(t: int, local_dim: int, settings: Settings) -> None:
    if t < 1:
        raise InvalidArgumentError(f"order t must be positive, got {t}")
    if local_dim == 2:
        order_cap = settings.max_qubit_order
    elif local_dim == 4:
        order_cap = settings.max_pair_order
    else:
        raise InvalidArgumentError(f"local_dim must be 2 or 4, got {local_dim}")
    if t > order_cap:
        raise DimensionCapError(f"dense permutation ket of order {t} at local_dim {local_dim}", t, order_cap)
    size = local_dim ** (2 * t)
    if size > settings.local_entry_cap:
        raise DimensionCapError("dense permutation ket", size, settings.local_entry_cap)


def _permutation_columns(sigma: Sequence[int], local_dim: int) -> np.ndarray:
    t = len(sigma)
    digits = np.indices((local_dim,) * t).reshape(t, -1)
    return np.ravel_multi_index(tuple(digits[image] for image in sigma), (local_dim,) * t)


def _permutation_vector(sigma: Sequence[int], local_dim: int) -> np.ndarray:
    side = local_dim ** len(sigma)
    matrix = np.zeros((side, side), dtype=complex)
    matrix[np.arange(side), _permutation_columns(sigma, local_dim)] = 1.0
    return matrix.ravel()


def permutation_ket(
    sigma: Sequence[int], local_dim: int, settings: Settings | None = None
) -> PermutationKet:
    """
    Dense vectorized permutation operator.

    Parameters:
    sigma (Sequence[int]): Zero-based permutation of t elements.
    local_dim (int): Per-copy dimension, 2 or 4.
    settings (Settings | None): Caps to enforce.

    Returns:
    PermutationKet: The operator sum_i |i_1..i_t><i_sigma(1)..i_sigma(t)|.

    Raises:
    DimensionCapError: If the dense vector would exceed the configured caps.
    """
    sigma = tuple(int(image) for image in sigma)
    if sorted(sigma) != list(range(len(sigma))):
        raise InvalidArgumentError(f"{sigma} is not a permutation")
    _check_dense_order(len(sigma), local_dim, settings or get_settings())
    ket = OperatorKet(coefficients=_permutation_vector(sigma, local_dim), local_dim=local_dim)
    return PermutationKet(sigma=sigma, local_dim=local_dim, ket=ket)


@lru_cache(maxsize=16)
def _cached_permutation_matrix(t: int, local_dim: int) -> np.ndarray:
    columns = [_permutation_vector(sigma, local_dim) for sigma in permutations_of(t)]
    return _frozen(np.stack(columns, axis=1))


def permutation_ket_matrix(t: int, local_dim: int, settings: Settings | None = None) -> np.ndarray:
    """All permutation kets of order t as the columns of a (local_dim^(2t), t!) matrix."""
    _check_dense_order(t, local_dim, settings or get_settings())
    return _cached_permutation_matrix(t, local_dim)


def gram_matrix(t: int, local_dim: int) -> np.ndarray:
    """
    Overlap matrix of the permutation kets.

    Parameters:
    t (int): Number of copies, at most 5.
    local_dim (int): Per-copy dimension.

    Returns:
    np.ndarray: The t! x t! matrix with entries local_dim^cycles(sigma^-1 tau).
    """
    if t < 1 or t > 5:
        raise DimensionCapError("Gram matrix order", t, 5)
    group = permutations_of(t)
    entries = [
        [float(local_dim) ** cycle_count(compose(inverse(sigma), tau)) for tau in group]
        for sigma in group
    ]
    return np.array(entries)


def permutation_overlap(factors: Sequence[np.ndarray], sigma: Sequence[int]) -> complex:
    """
    <<A_1 x ... x A_t|sigma>> for a product operator, one factor per copy.

    Each cycle contributes tr(A_m^+ A_s(m)^+ A_s(s(m))^+ ...) with s the inverse
    of sigma, so no d^t-dimensional object is formed.

    Parameters:
    factors (Sequence[np.ndarray]): t square matrices of equal size.
    sigma (Sequence[int]): Zero-based permutation of t elements.

    Returns:
    complex: The overlap.
    """
    if len(factors) != len(sigma):
        raise InvalidArgumentError("need one factor per copy")
    backwards = inverse(sigma)
    value = 1.0 + 0.0j
    for cycle in cycles(backwards):
        product = reduce(np.matmul, (np.asarray(factors[copy]).conj().T for copy in cycle))
        value *= np.trace(product)
    return complex(value)


@lru_cache(maxsize=8)
def pauli_basis(t: int) -> np.ndarray:
    """
    Normalized Pauli-string kets as the columns of a unitary 4^t x 4^t matrix.

    Column L holds the string with labels unravel(L, (4,)*t) divided by 2^(t/2).
    """
    if t < 1 or t > get_settings().max_qubit_order:
        raise DimensionCapError("Pauli basis order", t, get_settings().max_qubit_order)
    strings = PAULIS
    for _ in range(t - 1):
        count, side = strings.shape[0], strings.shape[1]
        strings = np.einsum("aij,bkl->abikjl", strings, PAULIS).reshape(count * 4, side * 2, side * 2)
    kets = strings.reshape(4**t, -1).T / 2 ** (t / 2)
    return _frozen(np.ascontiguousarray(kets))


@lru_cache(maxsize=8)
def pauli_degrees(t: int) -> np.ndarray:
    labels = np.indices((4,) * t).reshape(t, -1)
    return _frozen(np.count_nonzero(labels, axis=0))


def pauli_labels(t: int) -> Tuple[str, ...]:
    return tuple(PauliString.from_index(index, t).label for index in range(4**t))


def pauli_string_ket(labels: Sequence[int] | str) -> OperatorKet:
    string = PauliString.from_label(labels) if isinstance(labels, str) else PauliString(labels=tuple(labels))
    matrix = reduce(np.kron, (PAULIS[label] for label in string.labels))
    return OperatorKet(coefficients=matrix.ravel() / 2 ** (string.t / 2), local_dim=2)


def pauli_coordinates(ket: OperatorKet) -> np.ndarray:
    return pauli_basis(ket.t).conj().T @ ket.coefficients


def degree_component(ket: OperatorKet, degree: int) -> OperatorKet:
    """Projection of ``ket`` onto the Pauli strings with exactly ``degree`` non-identity factors."""
    basis = pauli_basis(ket.t)
    coordinates = basis.conj().T @ ket.coefficients
    coordinates[pauli_degrees(ket.t) != degree] = 0
    return OperatorKet(coefficients=basis @ coordinates, local_dim=2)


def collective_generator(t: int, axis: int) -> np.ndarray:
    """sum_c sigma_axis acting on copy c, as a 2^t x 2^t matrix."""
    total = np.zeros((2**t, 2**t), dtype=complex)
    for copy in range(t):
        total += reduce(np.kron, (PAULIS[axis] if position == copy else PAULIS[0] for position in range(t)))
    return total


def u2_residual(ket: OperatorKet) -> float:
    matrix = ket.as_matrix()
    return max(
        float(np.linalg.norm(generator @ matrix - matrix @ generator))
        for generator in (collective_generator(ket.t, axis) for axis in (1, 2, 3))
    )


def is_u2_invariant(ket: OperatorKet, tolerance: float = INVARIANCE_TOLERANCE) -> bool:
    """True when the operator commutes with every collective Pauli generator."""
    return u2_residual(ket) <= tolerance * max(1.0, ket.norm())


def twirl_residual(ket: OperatorKet, unitary: np.ndarray) -> float:
    power = reduce(np.kron, [np.asarray(unitary)] * ket.t)
    matrix = ket.as_matrix()
    return float(np.linalg.norm(power @ matrix @ power.conj().T - matrix))


def u2_invariant_basis(t: int, settings: Settings | None = None) -> List[OperatorKet]:
    """
    Orthonormal basis of the commutant of single-qubit U^(x t).

    The t! permutation kets are orthonormalized through the eigendecomposition
    of their Gram matrix; the span is then split by Pauli degree, which the
    U(2) action preserves. The first element is 2^(-t/2)|I>>, and each element
    is phase-fixed so its largest Pauli coefficient is real positive.

    Parameters:
    t (int): Number of copies, at most 5.
    settings (Settings | None): Caps to enforce.

    Returns:
    List[OperatorKet]: C_t kets, ordered by degree.

    Raises:
    ToleranceError: If the Gram null space does not have dimension t! - C_t.
    """
    columns = permutation_ket_matrix(t, 2, settings)
    gram = (columns.conj().T @ columns).real
    values, vectors = np.linalg.eigh(gram)
    keep = values > GRAM_NULL_TOLERANCE * values.max()
    expected_null = math.factorial(t) - catalan(t)
    null_dimension = int(values.size - keep.sum())
    if null_dimension != expected_null:
        raise ToleranceError(
            f"Gram null-space dimension {null_dimension} (expected {expected_null})",
            float(abs(null_dimension - expected_null)),
            0.0,
        )
    span = columns @ (vectors[:, keep] / np.sqrt(values[keep]))

    basis = pauli_basis(t)
    coordinates = basis.conj().T @ span
    degrees = pauli_degrees(t)
    elements: List[OperatorKet] = []
    for degree in range(t + 1):
        block = np.where((degrees == degree)[:, None], coordinates, 0)
        left, singular, _ = np.linalg.svd(block, full_matrices=False)
        rank = int(np.sum(singular > GRAM_NULL_TOLERANCE * max(1.0, singular[0])))
        for column in range(rank):
            elements.append(OperatorKet(coefficients=basis @ phase_fix(left[:, column]), local_dim=2))
    if len(elements) != catalan(t):
        raise ToleranceError(f"graded invariant count {len(elements)} (expected {catalan(t)})", float(len(elements)), 0.0)
    logger.debug("built %d U(2)-invariant kets for t=%d", len(elements), t)
    return elements


def _invariant_labels(elements: Sequence[OperatorKet]) -> Tuple[str, ...]:
    labels = []
    counters: dict[int, int] = {}
    degrees = pauli_degrees(elements[0].t)
    for element in elements:
        degree = int(degrees[np.argmax(np.abs(pauli_coordinates(element)))])
        counters[degree] = counters.get(degree, 0) + 1
        labels.append("I" if degree == 0 else f"w{degree}.{counters[degree]}")
    return tuple(labels)


@lru_cache(maxsize=16)
def local_basis(t: int, kind: str = "pauli") -> LocalBasis:
    """
    Build a local basis.

    Parameters:
    t (int): Number of copies.
    kind (str): "pauli" or "u2_invariant".

    Returns:
    LocalBasis: The basis with its Pauli coordinates.
    """
    if kind == "pauli":
        vectors = pauli_basis(t)
        return LocalBasis(
            kind="pauli",
            t=t,
            vectors=vectors,
            pauli_coordinates=np.eye(4**t),
            labels=pauli_labels(t),
        )
    if kind == "u2_invariant":
        elements = u2_invariant_basis(t)
        vectors = np.stack([element.coefficients for element in elements], axis=1)
        return LocalBasis(
            kind="u2_invariant",
            t=t,
            vectors=vectors,
            pauli_coordinates=pauli_basis(t).conj().T @ vectors,
            labels=_invariant_labels(elements),
        )
    raise InvalidArgumentError(f"unknown local basis kind {kind!r}")


def pair_ket(first: OperatorKet, second: OperatorKet) -> OperatorKet:
    """
    |A>> x |C>> on t copies of a qubit pair, qubit A first within each copy.

    Parameters:
    first (OperatorKet): Operator on t copies of the first qubit.
    second (OperatorKet): Operator on t copies of the second qubit.

    Returns:
    OperatorKet: Ket with local_dim 4.
    """
    t = first.t
    if second.t != t or first.local_dim != 2 or second.local_dim != 2:
        raise InvalidArgumentError("pair_ket needs two single-qubit kets of the same order")
    joint = np.multiply.outer(
        first.coefficients.reshape((2,) * (2 * t)), second.coefficients.reshape((2,) * (2 * t))
    )
    rows = [axis for copy in range(t) for axis in (copy, 2 * t + copy)]
    cols = [axis for copy in range(t) for axis in (t + copy, 3 * t + copy)]
    return OperatorKet(coefficients=joint.transpose(rows + cols).ravel(), local_dim=4)
