"""
Largest eigenpair of a Hermitian operator on the complement of a known eigenspace.

Two paths share one contract: a dense ``eigh`` on the compressed complement,
and an implicitly restarted Lanczos run (ARPACK through ``eigsh``) on the
operator P M P - 2 Q Q^+, where Q spans the deflated vectors and P = 1 - Q Q^+.
The shift sends the deflated directions to -2, below the spectrum of any
averaged moment operator, so the largest algebraic eigenvalue is the one
sought even when it is negative. The same deflation, without the shift, gives
the leading part of the spectrum by magnitude.

Classes:
    EigenPair: Result of a deflated solve.
    DeflatedEigensolver: Dense and iterative solvers with retry on non-convergence.
"""

import logging
from typing import Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from moment_gap.config.settings import Settings, get_settings
from moment_gap.exceptions import ConvergenceError, InvalidArgumentError
from moment_gap.models import ReadOnlyArray
from moment_gap.services.linalg import orthonormal_complement

logger = logging.getLogger(__name__)

DEGENERACY_TOLERANCE = 1e-8


class EigenPair(BaseModel):
    """
    Largest eigenvalue on the deflated complement.

    Attributes:
        value (float): The eigenvalue.
        vector (ReadOnlyArray): A normalized eigenvector.
        residual (float): |M v - value v|.
        multiplicity (int): Numerical multiplicity among the computed eigenvalues.
        method (str): "dense" or "iterative".
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: float
    vector: ReadOnlyArray
    residual: float
    multiplicity: int
    method: Literal["dense", "iterative"]


class DeflatedEigensolver:
    def __init__(self, settings: Settings | None = None):
        self.settings = settings or get_settings()

    def largest_dense(self, matrix: np.ndarray, deflated: np.ndarray) -> EigenPair:
        """
        Dense solve on the orthogonal complement of ``deflated``.

        Parameters:
        matrix (np.ndarray): Hermitian matrix.
        deflated (np.ndarray): Orthonormal columns spanning the excluded eigenspace.

        Returns:
        EigenPair: The largest eigenpair on the complement.
        """
        complement = orthonormal_complement(deflated)
        if complement.shape[1] == 0:
            raise InvalidArgumentError("the deflated vectors span the whole space")
        compressed = complement.conj().T @ matrix @ complement
        compressed = 0.5 * (compressed + compressed.conj().T)
        values, vectors = linalg.eigh(compressed)
        value = float(values[-1])
        vector = complement @ vectors[:, -1]
        residual = float(np.linalg.norm(matrix @ vector - value * vector))
        multiplicity = int(np.sum(values >= value - DEGENERACY_TOLERANCE))
        return EigenPair(
            value=value, vector=vector, residual=residual, multiplicity=multiplicity, method="dense"
        )

    def largest_iterative(self, operator: LinearOperator, deflated: np.ndarray) -> EigenPair:
        """
        Lanczos solve with explicit deflation, retried with a wider Krylov space.

        Parameters:
        operator (LinearOperator): Hermitian operator.
        deflated (np.ndarray): Orthonormal columns spanning the excluded eigenspace.

        Returns:
        EigenPair: The largest eigenpair on the complement.

        Raises:
        ConvergenceError: If every attempt fails to converge.
        """
        dimension = operator.shape[0]
        basis = np.asarray(deflated)
        if basis.shape[1] >= dimension:
            raise InvalidArgumentError("the deflated vectors span the whole space")
        dtype = np.result_type(operator.dtype, basis.dtype)

        def project(block: np.ndarray) -> np.ndarray:
            return block - basis @ (basis.conj().T @ block)

        def apply(block: np.ndarray) -> np.ndarray:
            block = np.asarray(block).reshape(dimension, -1)
            image = project(operator.matmat(project(block)))
            return image - 2.0 * basis @ (basis.conj().T @ block)

        shifted = LinearOperator(
            (dimension, dimension), matvec=apply, matmat=apply, rmatvec=apply, dtype=dtype
        )
        start = project(np.random.default_rng(0).standard_normal((dimension, 1))).ravel()
        count = min(3, dimension - basis.shape[1], dimension - 1)

        values, vectors = self._eigsh(shifted, count, "LA", start)
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]
        value = float(values[-1])
        vector = vectors[:, -1] / np.linalg.norm(vectors[:, -1])
        residual = float(np.linalg.norm(operator.matvec(vector) - value * vector))
        multiplicity = int(np.sum(values >= value - DEGENERACY_TOLERANCE))
        return EigenPair(
            value=value, vector=vector, residual=residual, multiplicity=multiplicity, method="iterative"
        )

    def spectrum_dense(self, matrix: np.ndarray, deflated: np.ndarray) -> np.ndarray:
        """All eigenvalues on the orthogonal complement of ``deflated``, ascending."""
        complement = orthonormal_complement(deflated)
        if complement.shape[1] == 0:
            raise InvalidArgumentError("the deflated vectors span the whole space")
        compressed = complement.conj().T @ matrix @ complement
        return linalg.eigvalsh(0.5 * (compressed + compressed.conj().T))

    def leading_iterative(self, operator: LinearOperator, deflated: np.ndarray, count: int) -> np.ndarray:
        """
        The ``count`` eigenvalues of largest magnitude on the complement of ``deflated``.

        The deflated directions are mapped to zero, so they never compete.

        Parameters:
        operator (LinearOperator): Hermitian operator.
        deflated (np.ndarray): Orthonormal columns spanning the excluded eigenspace.
        count (int): Number of eigenvalues wanted.

        Returns:
        np.ndarray: Eigenvalues sorted by decreasing magnitude.

        Raises:
        ConvergenceError: If every attempt fails to converge.
        """
        dimension = operator.shape[0]
        basis = np.asarray(deflated)
        if basis.shape[1] >= dimension:
            raise InvalidArgumentError("the deflated vectors span the whole space")

        def project(block: np.ndarray) -> np.ndarray:
            return block - basis @ (basis.conj().T @ block)

        def apply(block: np.ndarray) -> np.ndarray:
            block = np.asarray(block).reshape(dimension, -1)
            return project(operator.matmat(project(block)))

        projected = LinearOperator(
            (dimension, dimension),
            matvec=apply,
            matmat=apply,
            rmatvec=apply,
            dtype=np.result_type(operator.dtype, basis.dtype),
        )
        start = project(np.random.default_rng(0).standard_normal((dimension, 1))).ravel()
        count = max(1, min(count, dimension - basis.shape[1], dimension - 2))
        values, _ = self._eigsh(projected, count, "LM", start)
        return values[np.argsort(-np.abs(values), kind="stable")]

    def _eigsh(
        self, operator: LinearOperator, count: int, which: str, start: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        dimension = operator.shape[0]
        retrying = Retrying(
            stop=stop_after_attempt(self.settings.eigsh_attempts),
            retry=retry_if_exception_type(ArpackNoConvergence),
            reraise=True,
        )
        try:
            for attempt in retrying:
                with attempt:
                    number = attempt.retry_state.attempt_number
                    ncv = min(dimension, self.settings.eigsh_ncv << (number - 1))
                    logger.debug("lanczos attempt %d with ncv=%d on dimension %d", number, ncv, dimension)
                    values, vectors = eigsh(
                        operator,
                        k=count,
                        which=which,
                        ncv=max(ncv, count + 2) if dimension > count + 2 else None,
                        maxiter=self.settings.eigsh_max_iterations,
                        v0=start,
                    )
        except ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"Lanczos did not converge after {self.settings.eigsh_attempts} attempts "
                f"on dimension {dimension}"
            ) from exc
        return values, vectors
