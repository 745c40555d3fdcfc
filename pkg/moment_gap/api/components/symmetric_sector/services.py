"""
This module assembles M_t in the totally symmetric sector and computes its gap.

In the n-boson Fock representation the ordered-pair average of the local
moment operator is the normal-ordered two-body operator
(1/(n(n-1))) sum c_{alpha beta gamma delta} a+_alpha a+_gamma a_beta a_delta,
which factorizes through the pair-annihilation ladder K.

Functions:
    sector_dimension: C(d+n-1, n).
    occupation_basis: Ordered occupation basis with rank/unrank.
    product_state_in_fock: Fock image of v^(x n).
    pair_annihilation_ladder: The sparse map a_beta a_delta from n to n-2 bosons.
    collective_operator: B_{alpha beta} = a+_alpha a_beta on the sector.
    assemble_symmetric_moment_matrix: M_t on the sector.
    permutation_fixed_vectors: Fock images of the product permutation kets.
    spectral_gap: Deflated largest eigenvalue and gap.
    leading_eigenvalues: Deflated eigenvalues of largest magnitude.
    power_convergence: |M^k v - P v| for k = 0..steps.
    brute_force_moment_operator: Dense M_t on the full moment space of n sites.
    sector_spectral_gap: Assembly, deflation and gap in one call.
"""

import logging
import math
from functools import lru_cache
from itertools import combinations
from typing import List, Sequence

import numpy as np
from scipy import linalg, sparse
from scipy.special import gammaln

from moment_gap.api.components.gate_averaging.model import LocalMomentOperator
from moment_gap.api.components.moment_space import services as moment_space
from moment_gap.api.components.moment_space.model import LocalBasis
from moment_gap.config.settings import Settings, get_settings
from moment_gap.exceptions import (
    BasisMismatchError,
    DeflationError,
    DimensionCapError,
    InvalidArgumentError,
    ToleranceError,
)
from moment_gap.services.eigensolver import DeflatedEigensolver
from moment_gap.services.linalg import realify
from .model import OccupationBasis, SpectralResult, SymmetricMomentMatrix

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
FIXED_TOLERANCE = 1e-8
UNIT_GAP_TOLERANCE = 1e-12


def sector_dimension(local_dim: int, n: int) -> int:
    return math.comb(local_dim + n - 1, n)


def _binomial_table(rows: int, cols: int) -> np.ndarray:
    table = np.zeros((rows + 1, cols + 1), dtype=np.int64)
    for top in range(rows + 1):
        for bottom in range(min(top, cols) + 1):
            table[top, bottom] = math.comb(top, bottom)
    return table


@lru_cache(maxsize=32)
def _cached_basis(local_dim: int, n: int) -> OccupationBasis:
    if local_dim == 1:
        states = np.array([[n]], dtype=np.int64)
    else:
        bars = np.array(list(combinations(range(n + local_dim - 1), local_dim - 1)), dtype=np.int64)
        bars = bars.reshape(-1, local_dim - 1)[::-1]
        edges = np.concatenate(
            [np.full((bars.shape[0], 1), -1), bars, np.full((bars.shape[0], 1), n + local_dim - 1)], axis=1
        )
        states = np.diff(edges, axis=1) - 1
    return OccupationBasis(
        local_dim=local_dim,
        n=n,
        states=np.ascontiguousarray(states),
        binomials=_binomial_table(n + local_dim, local_dim),
    )


def occupation_basis(local_dim: int, n: int, settings: Settings | None = None) -> OccupationBasis:
    """
    The n-boson basis over local_dim modes.

    Parameters:
    local_dim (int): Number of modes.
    n (int): Number of bosons.
    settings (Settings | None): Supplies the dimension cap.

    Returns:
    OccupationBasis: States ordered from (n, 0, ...) to (..., 0, n).

    Raises:
    DimensionCapError: If C(local_dim + n - 1, n) exceeds the cap.
    """
    settings = settings or get_settings()
    if local_dim < 1 or n < 0:
        raise InvalidArgumentError(f"need local_dim >= 1 and n >= 0, got {local_dim} and {n}")
    size = sector_dimension(local_dim, n)
    if size > settings.dimension_cap:
        raise DimensionCapError(f"symmetric sector of {n} sites over {local_dim} modes", size, settings.dimension_cap)
    return _cached_basis(local_dim, n)


def product_state_in_fock(vector: np.ndarray, n: int, basis: OccupationBasis | None = None) -> np.ndarray:
    """
    The Fock vector of |v>>^(x n).

    Amplitudes are sqrt(n! / prod n_a!) prod v_a^n_a, evaluated in log space.

    Parameters:
    vector (np.ndarray): Unit vector over the local modes.
    n (int): Number of sites.
    basis (OccupationBasis | None): Target basis; built when omitted.

    Returns:
    np.ndarray: Unit Fock vector.

    Raises:
    InvalidArgumentError: If the vector is not normalized within 1e-12.
    """
    vector = np.asarray(vector, dtype=complex)
    norm = float(np.linalg.norm(vector))
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise InvalidArgumentError(f"local vector has norm {norm!r}, expected 1")
    basis = basis or occupation_basis(vector.size, n)
    if basis.local_dim != vector.size or basis.n != n:
        raise BasisMismatchError(f"vector over {vector.size} modes does not match a {basis.local_dim}-mode basis")
    states = basis.states
    magnitudes = np.abs(vector)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(magnitudes)
        log_powers = np.where(states > 0, states * logs[None, :], 0.0).sum(axis=1)
    log_multinomial = 0.5 * (gammaln(n + 1) - gammaln(states + 1).sum(axis=1))
    phases = np.exp(1j * (states * np.angle(vector)[None, :]).sum(axis=1))
    return np.exp(log_multinomial + log_powers) * phases


def pair_annihilation_ladder(upper: OccupationBasis, lower: OccupationBasis) -> sparse.csr_matrix:
    """
    The matrix of a_beta a_delta from n to n - 2 bosons.

    Parameters:
    upper (OccupationBasis): The n-boson basis.
    lower (OccupationBasis): The (n - 2)-boson basis over the same modes.

    Returns:
    sparse.csr_matrix: Shape (lower.size * d^2, upper.size), row r * d^2 + beta * d + delta.
    """
    local_dim = upper.local_dim
    if lower.local_dim != local_dim or lower.n != upper.n - 2:
        raise BasisMismatchError("ladder bases must share modes and differ by two bosons")
    states = upper.states
    columns = np.arange(upper.size)
    rows, cols, values = [], [], []
    for beta in range(local_dim):
        for delta in range(local_dim):
            after_delta = states[:, delta].astype(float)
            after_beta = states[:, beta] - (1 if beta == delta else 0)
            valid = (after_delta > 0) & (after_beta > 0)
            if not np.any(valid):
                continue
            remaining = states[valid].copy()
            remaining[:, delta] -= 1
            remaining[:, beta] -= 1
            target = lower.rank_many(remaining)
            rows.append(target * local_dim**2 + beta * local_dim + delta)
            cols.append(columns[valid])
            values.append(np.sqrt(after_delta[valid] * after_beta[valid]))
    shape = (lower.size * local_dim**2, upper.size)
    if not rows:
        return sparse.csr_matrix(shape)
    return sparse.csr_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))), shape=shape
    )


def collective_operator(basis: OccupationBasis, alpha: int, beta: int) -> sparse.csr_matrix:
    """B_{alpha beta} = a+_alpha a_beta as a sparse matrix on the sector."""
    states = basis.states
    valid = states[:, beta] > 0
    moved = states[valid].copy()
    amplitude = np.sqrt(moved[:, beta].astype(float))
    moved[:, beta] -= 1
    amplitude = amplitude * np.sqrt(moved[:, alpha] + 1.0)
    moved[:, alpha] += 1
    return sparse.csr_matrix(
        (amplitude, (basis.rank_many(moved), np.flatnonzero(valid))), shape=(basis.size, basis.size)
    )


def assemble_symmetric_moment_matrix(
    m_local: LocalMomentOperator,
    n: int,
    basis: OccupationBasis | None = None,
    settings: Settings | None = None,
) -> SymmetricMomentMatrix:
    """
    M_t = (1/(n(n-1))) sum_{i != j} m^{ij} restricted to the n-boson sector.

    Parameters:
    m_local (LocalMomentOperator): The local moment operator; its basis sets the modes.
    n (int): Number of qubits, at least 2.
    basis (OccupationBasis | None): A prebuilt n-boson basis.
    settings (Settings | None): Supplies the dimension cap.

    Returns:
    SymmetricMomentMatrix: The ladder factorization of M_t.

    Raises:
    BasisMismatchError: If the occupation basis has a different number of modes.
    DimensionCapError: If the sector exceeds the cap.
    """
    settings = settings or get_settings()
    if n < 2:
        raise InvalidArgumentError(f"need at least two qubits, got n={n}")
    local_dim = m_local.size
    basis = basis or occupation_basis(local_dim, n, settings)
    if basis.local_dim != local_dim or basis.n != n:
        raise BasisMismatchError(
            f"occupation basis over {basis.local_dim} modes and {basis.n} bosons does not match "
            f"a {local_dim}-element local basis at n={n}"
        )
    lower = occupation_basis(local_dim, n - 2, settings)
    ladder = pair_annihilation_ladder(basis, lower)
    logger.info(
        "assembled sector n=%d t=%d: dimension %d over %d modes (%d ladder entries)",
        n, m_local.t, basis.size, local_dim, ladder.nnz,
    )
    return SymmetricMomentMatrix(
        n=n,
        t=m_local.t,
        basis=basis,
        ladder=ladder,
        pair_matrix=realify(m_local.matrix),
        basis_descriptor=f"{m_local.basis.kind}:{m_local.distribution}",
        asymmetry=m_local.asymmetry,
    )


def permutation_fixed_vectors(local: LocalBasis, basis: OccupationBasis) -> List[np.ndarray]:
    """
    Fock images of |sigma>>^(x n) for every sigma in S_t.

    Parameters:
    local (LocalBasis): The local basis the sector is built on.
    basis (OccupationBasis): The n-boson basis.

    Returns:
    List[np.ndarray]: One unit Fock vector per permutation, in lexicographic order.

    Raises:
    BasisMismatchError: If a permutation ket lies outside the span of the local basis.
    """
    vectors = []
    for sigma in moment_space.permutations_of(local.t):
        ket = moment_space.permutation_ket(sigma, 2).ket.normalized()
        coordinates = local.coordinates(ket)
        norm = float(np.linalg.norm(coordinates))
        if abs(norm - 1.0) > 1e-9:
            raise BasisMismatchError(f"permutation {sigma} is not in the span of the {local.kind} basis")
        vectors.append(product_state_in_fock(coordinates / norm, basis.n, basis))
    return vectors


def _check_fixed(matrix: SymmetricMomentMatrix, vectors: Sequence[np.ndarray]) -> np.ndarray:
    stack = np.stack([np.asarray(vector, dtype=complex) for vector in vectors], axis=1)
    stack = stack / np.linalg.norm(stack, axis=0)
    images = matrix.matmat(stack)
    for index in range(stack.shape[1]):
        residual = float(np.linalg.norm(images[:, index] - stack[:, index]))
        if residual > FIXED_TOLERANCE:
            logger.error("deflation vector %d is not fixed: residual %.3e", index, residual)
            raise DeflationError(index, residual)
    return linalg.orth(stack)


def spectral_gap(
    matrix: SymmetricMomentMatrix,
    known_fixed_vectors: Sequence[np.ndarray],
    settings: Settings | None = None,
    solver: DeflatedEigensolver | None = None,
) -> SpectralResult:
    """
    Largest eigenvalue of M_t on the complement of its known eigenvalue-1 span.

    Parameters:
    matrix (SymmetricMomentMatrix): The assembled sector matrix.
    known_fixed_vectors (Sequence[np.ndarray]): Eigenvalue-1 vectors, usually the permutation products.
    settings (Settings | None): Dense threshold and solver knobs.
    solver (DeflatedEigensolver | None): Eigensolver to use.

    Returns:
    SpectralResult: lambda1, the gap and diagnostics.

    Raises:
    DeflationError: If a supplied vector is not fixed within 1e-8.
    ConvergenceError: If the iterative solver does not converge.
    ToleranceError: If an eigenvalue 1 remains outside the supplied span.
    """
    settings = settings or get_settings()
    solver = solver or DeflatedEigensolver(settings)
    if not known_fixed_vectors:
        raise InvalidArgumentError("at least one fixed vector is required for deflation")
    deflated = _check_fixed(matrix, known_fixed_vectors)
    if matrix.dimension <= settings.dense_threshold:
        logger.info("dense eigensolve on dimension %d", matrix.dimension)
        pair = solver.largest_dense(matrix.to_dense(), deflated)
    else:
        logger.info("iterative eigensolve on dimension %d", matrix.dimension)
        pair = solver.largest_iterative(matrix.linear_operator(), deflated)
    gap = 1.0 - pair.value
    if gap <= UNIT_GAP_TOLERANCE:
        raise ToleranceError("eigenvalue 1 outside the permutation span, gap", gap, UNIT_GAP_TOLERANCE)
    if pair.multiplicity > 1:
        logger.warning("lambda1 = %.12f is %d-fold degenerate", pair.value, pair.multiplicity)
    return SpectralResult(
        unit_multiplicity=deflated.shape[1],
        lambda1=pair.value,
        gap=gap,
        method=pair.method,
        residual=pair.residual,
        lambda1_multiplicity=pair.multiplicity,
        dimension=matrix.dimension,
        vector=pair.vector,
    )


def leading_eigenvalues(
    matrix: SymmetricMomentMatrix,
    known_fixed_vectors: Sequence[np.ndarray],
    count: int = 4,
    settings: Settings | None = None,
    solver: DeflatedEigensolver | None = None,
) -> np.ndarray:
    """
    Eigenvalues of largest magnitude on the complement of the eigenvalue-1 span.

    Parameters:
    matrix (SymmetricMomentMatrix): The assembled sector matrix.
    known_fixed_vectors (Sequence[np.ndarray]): Eigenvalue-1 vectors to deflate.
    count (int): How many eigenvalues to return.
    settings (Settings | None): Dense threshold and solver knobs.
    solver (DeflatedEigensolver | None): Eigensolver to use.

    Returns:
    np.ndarray: At most ``count`` eigenvalues, by decreasing magnitude.
    """
    settings = settings or get_settings()
    solver = solver or DeflatedEigensolver(settings)
    if count < 1:
        raise InvalidArgumentError(f"count must be positive, got {count}")
    deflated = _check_fixed(matrix, known_fixed_vectors)
    if matrix.dimension <= settings.dense_threshold:
        values = solver.spectrum_dense(matrix.to_dense(), deflated)
        values = values[np.argsort(-np.abs(values), kind="stable")]
    else:
        values = solver.leading_iterative(matrix.linear_operator(), deflated, count)
    return values[:count]


def power_convergence(
    matrix: SymmetricMomentMatrix, vector: np.ndarray, steps: int, fixed_vectors: Sequence[np.ndarray]
) -> np.ndarray:
    """
    Distances |M^k v - P v| for k = 0..steps, P the projector onto the fixed span.

    Parameters:
    matrix (SymmetricMomentMatrix): The sector matrix.
    vector (np.ndarray): Start vector.
    steps (int): Largest power.
    fixed_vectors (Sequence[np.ndarray]): Vectors spanning the eigenvalue-1 space.

    Returns:
    np.ndarray: Array of length steps + 1.
    """
    span = linalg.orth(np.stack(fixed_vectors, axis=1))
    limit = span @ (span.conj().T @ vector)
    current = np.asarray(vector, dtype=complex)
    distances = [float(np.linalg.norm(current - limit))]
    for _ in range(steps):
        current = matrix.matvec(current)
        distances.append(float(np.linalg.norm(current - limit)))
    return np.array(distances)


def brute_force_moment_operator(
    m_local: LocalMomentOperator, n: int, settings: Settings | None = None
) -> np.ndarray:
    """
    Dense (2/(n(n-1))) sum_{i<j} m~^{ij} on the full d^n-dimensional space.

    m~ is the ordered-pair average of the local operator, so the result is the
    same operator the sector assembly restricts.

    Parameters:
    m_local (LocalMomentOperator): The local moment operator.
    n (int): Number of sites.
    settings (Settings | None): Supplies brute_force_cap.

    Returns:
    np.ndarray: Matrix of side size^n, sites ordered with site 0 most significant.

    Raises:
    DimensionCapError: If size^n exceeds the cap.
    """
    settings = settings or get_settings()
    size = m_local.size
    dimension = size**n
    if dimension > settings.brute_force_cap:
        raise DimensionCapError(f"full moment space of {n} sites", dimension, settings.brute_force_cap)
    coefficients = m_local.pair_symmetrized().coefficient_tensor()
    identity = np.eye(dimension).reshape((size,) * n + (dimension,))
    total = np.zeros((size,) * n + (dimension,), dtype=coefficients.dtype)
    for first, second in combinations(range(n), 2):
        image = np.tensordot(coefficients, identity, axes=([2, 3], [first, second]))
        total += np.moveaxis(image, [0, 1], [first, second])
    return realify(total.reshape(dimension, dimension) * (2.0 / (n * (n - 1))))


def sector_spectral_gap(
    m_local: LocalMomentOperator, n: int, settings: Settings | None = None
) -> SpectralResult:
    """Assemble M_t at n sites and deflate the permutation products."""
    settings = settings or get_settings()
    matrix = assemble_symmetric_moment_matrix(m_local, n, settings=settings)
    fixed = permutation_fixed_vectors(m_local.basis, matrix.basis)
    return spectral_gap(matrix, fixed, settings=settings)
