"""
This module defines the data models of the totally symmetric (bosonic) sector.

Classes:
    OccupationState: Occupation numbers of one Fock state.
    OccupationBasis: The ordered n-boson basis over d local modes, with rank/unrank.
    SymmetricMomentMatrix: M_t restricted to the sector, held as a ladder factorization.
    SpectralResult: Subdominant eigenvalue and gap of a sector matrix.
"""

from typing import Any, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import sparse
from scipy.sparse.linalg import LinearOperator

from moment_gap.exceptions import DimensionCapError, InvalidArgumentError
from moment_gap.models import ReadOnlyArray

DENSE_BLOCK = 256


class OccupationState(BaseModel):
    model_config = ConfigDict(frozen=True)

    occupations: Tuple[int, ...]

    @field_validator("occupations")
    @classmethod
    def _check_occupations(cls, occupations: Tuple[int, ...]) -> Tuple[int, ...]:
        if not occupations or any(count < 0 for count in occupations):
            raise ValueError("occupations must be a non-empty tuple of non-negative integers")
        return occupations

    @property
    def total(self) -> int:
        return sum(self.occupations)

    @property
    def local_dim(self) -> int:
        return len(self.occupations)


class OccupationBasis(BaseModel):
    """
    The C(d+n-1, n) occupation vectors of n bosons in d modes.

    States are ordered lexicographically with the first mode most significant
    and descending, so (n, 0, ..., 0) has rank 0 and (0, ..., 0, n) is last.

    Attributes:
        local_dim (int): Number of modes d.
        n (int): Number of bosons.
        states (ReadOnlyArray): Integer array of shape (size, d).
        binomials (ReadOnlyArray): Table C(a, b) for a <= n + d, b <= d.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    local_dim: int
    n: int
    states: ReadOnlyArray
    binomials: ReadOnlyArray

    @property
    def size(self) -> int:
        return int(self.states.shape[0])

    def state(self, index: int) -> OccupationState:
        return OccupationState(occupations=tuple(int(count) for count in self.states[index]))

    def unrank(self, index: int) -> OccupationState:
        if not 0 <= index < self.size:
            raise InvalidArgumentError(f"rank {index} outside [0, {self.size})")
        return self.state(index)

    def rank_many(self, occupations: np.ndarray) -> np.ndarray:
        """
        Vectorized rank of occupation rows with total n.

        rank = sum_k C(rem_k - n_k - 1 + d - k - 1, d - k - 1) over modes k with n_k < rem_k,
        where rem_k is the number of bosons not yet placed in modes before k.
        """
        occupations = np.asarray(occupations, dtype=np.int64).reshape(-1, self.local_dim)
        remaining = self.n - np.concatenate(
            [np.zeros((occupations.shape[0], 1), dtype=np.int64), np.cumsum(occupations, axis=1)[:, :-1]],
            axis=1,
        )
        ranks = np.zeros(occupations.shape[0], dtype=np.int64)
        for mode in range(self.local_dim - 1):
            free = self.local_dim - mode - 1
            below = remaining[:, mode] > occupations[:, mode]
            top = remaining[:, mode] - occupations[:, mode] - 1 + free
            ranks += np.where(below, self.binomials[np.maximum(top, 0), free], 0)
        return ranks

    def rank(self, state: OccupationState | Tuple[int, ...]) -> int:
        occupations = state.occupations if isinstance(state, OccupationState) else tuple(state)
        if len(occupations) != self.local_dim or sum(occupations) != self.n or min(occupations) < 0:
            raise InvalidArgumentError(f"{occupations} is not an occupation of {self.n} bosons in {self.local_dim} modes")
        return int(self.rank_many(np.array(occupations))[0])


class SymmetricMomentMatrix(BaseModel):
    """
    M = K^T (I x C) K / (n (n - 1)) on the n-boson sector.

    K is the pair-annihilation ladder from n to n - 2 bosons, with rows
    indexed r * d^2 + beta * d + delta for the amplitude of a_beta a_delta, and
    C is the local pair matrix c_{(alpha gamma),(beta delta)}.

    Attributes:
        n (int): Number of qubits.
        t (int): Moment order.
        basis (OccupationBasis): The n-boson basis.
        ladder (Any): Sparse CSR matrix K of shape (size(n-2) * d^2, size(n)).
        pair_matrix (ReadOnlyArray): C of shape (d^2, d^2).
        basis_descriptor (str): Kind of local basis and its distribution.
        asymmetry (float): Hermitian asymmetry of the local matrix before correction.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int
    t: int
    basis: OccupationBasis
    ladder: Any
    pair_matrix: ReadOnlyArray
    basis_descriptor: str
    asymmetry: float = 0.0

    @field_validator("ladder")
    @classmethod
    def _check_ladder(cls, ladder: Any) -> Any:
        if not sparse.issparse(ladder):
            raise ValueError("ladder must be a scipy sparse matrix")
        return ladder.tocsr()

    @property
    def local_dim(self) -> int:
        return self.basis.local_dim

    @property
    def dimension(self) -> int:
        return self.basis.size

    @property
    def dtype(self) -> np.dtype:
        return np.result_type(self.pair_matrix.dtype, np.float64)

    def matmat(self, block: np.ndarray) -> np.ndarray:
        block = np.asarray(block).reshape(self.dimension, -1)
        pairs = self.local_dim**2
        lowered = (self.ladder @ block).reshape(-1, pairs, block.shape[1])
        mixed = np.einsum("ab,rbk->rak", self.pair_matrix, lowered, optimize=True)
        return (self.ladder.T @ mixed.reshape(-1, block.shape[1])) / (self.n * (self.n - 1))

    def matvec(self, vector: np.ndarray) -> np.ndarray:
        return self.matmat(np.asarray(vector).reshape(-1, 1)).ravel()

    def linear_operator(self) -> LinearOperator:
        return LinearOperator(
            (self.dimension, self.dimension),
            matvec=self.matvec,
            matmat=self.matmat,
            rmatvec=self.matvec,
            dtype=self.dtype,
        )

    def to_dense(self, cap: Optional[int] = None) -> np.ndarray:
        """
        Dense realization, built in column blocks.

        Parameters:
        cap (Optional[int]): Largest admissible dimension.

        Returns:
        np.ndarray: The dimension x dimension matrix.
        """
        if cap is not None and self.dimension > cap:
            raise DimensionCapError("dense symmetric-sector matrix", self.dimension, cap)
        dense = np.empty((self.dimension, self.dimension), dtype=self.dtype)
        for start in range(0, self.dimension, DENSE_BLOCK):
            stop = min(self.dimension, start + DENSE_BLOCK)
            columns = np.zeros((self.dimension, stop - start))
            columns[np.arange(start, stop), np.arange(stop - start)] = 1.0
            dense[:, start:stop] = self.matmat(columns)
        return dense


class SpectralResult(BaseModel):
    """
    Attributes:
        unit_multiplicity (int): Dimension of the deflated eigenvalue-1 span.
        lambda1 (float): Largest eigenvalue on its complement.
        gap (float): 1 - lambda1.
        method (str): "dense" or "iterative".
        residual (float): |M v - lambda1 v|.
        lambda1_multiplicity (int): Numerical multiplicity of lambda1.
        dimension (int): Sector dimension.
        vector (Optional[ReadOnlyArray]): The subdominant eigenvector.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    unit_multiplicity: int = Field(ge=1)
    lambda1: float
    gap: float = Field(gt=0.0, le=2.0 + 1e-9)
    method: Literal["dense", "iterative"]
    residual: float
    lambda1_multiplicity: int = 1
    dimension: int
    vector: Optional[ReadOnlyArray] = Field(default=None, exclude=True)
