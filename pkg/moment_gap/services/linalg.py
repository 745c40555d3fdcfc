"""
Dense linear-algebra helpers used by several components.

Functions:
    hermitize_inplace: Replace a square matrix by its Hermitian part, blockwise.
    phase_fix: Rotate a vector so its largest-magnitude entry is real positive.
    orthonormal_complement: Orthonormal basis of the complement of a set of vectors.
    realify: Drop a negligible imaginary part.
"""

import numpy as np
from scipy import linalg

from moment_gap.exceptions import ToleranceError

HERMITIAN_TOLERANCE = 1e-8


def hermitize_inplace(matrix: np.ndarray, tolerance: float = HERMITIAN_TOLERANCE, block: int = 512) -> float:
    """
    Overwrite ``matrix`` with (A + A^+)/2 and return max |A - A^+|.

    The update walks block pairs (i, j >= i) so no full-size temporary is made.

    Parameters:
    matrix (np.ndarray): Square matrix, modified in place.
    tolerance (float): Largest asymmetry that is silently corrected.
    block (int): Block edge length.

    Returns:
    float: The asymmetry before symmetrization.

    Raises:
    ToleranceError: If the asymmetry exceeds ``tolerance``.
    """
    size = matrix.shape[0]
    asymmetry = 0.0
    for row in range(0, size, block):
        rows = slice(row, min(size, row + block))
        for col in range(row, size, block):
            cols = slice(col, min(size, col + block))
            upper = matrix[rows, cols]
            lower = matrix[cols, rows].conj().T
            if upper.size:
                asymmetry = max(asymmetry, float(np.max(np.abs(upper - lower))))
    if asymmetry > tolerance:
        raise ToleranceError("Hermitian asymmetry", asymmetry, tolerance)
    if asymmetry == 0.0:
        return asymmetry
    for row in range(0, size, block):
        rows = slice(row, min(size, row + block))
        for col in range(row, size, block):
            cols = slice(col, min(size, col + block))
            average = 0.5 * (matrix[rows, cols] + matrix[cols, rows].conj().T)
            matrix[rows, cols] = average
            matrix[cols, rows] = average.conj().T
    return asymmetry


def phase_fix(vector: np.ndarray) -> np.ndarray:
    vector = np.asarray(vector, dtype=complex)
    pivot = int(np.argmax(np.abs(vector)))
    magnitude = abs(vector[pivot])
    if magnitude == 0.0:
        return vector
    return vector * (np.conj(vector[pivot]) / magnitude)


def orthonormal_complement(vectors: np.ndarray) -> np.ndarray:
    """
    Columns spanning the orthogonal complement of the columns of ``vectors``.

    Parameters:
    vectors (np.ndarray): Matrix of shape (dim, k).

    Returns:
    np.ndarray: Matrix of shape (dim, dim - rank) with orthonormal columns.
    """
    vectors = np.asarray(vectors)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    return linalg.null_space(vectors.conj().T)


def realify(array: np.ndarray, threshold: float = 1e-12) -> np.ndarray:
    array = np.asarray(array)
    if np.iscomplexobj(array) and (array.size == 0 or np.max(np.abs(array.imag)) <= threshold):
        return np.ascontiguousarray(array.real)
    return array
