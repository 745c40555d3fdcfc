"""
This module defines the data models of the local moment space.

An operator on t copies of a d-dimensional system is stored as the row-major
flattening of its d^t x d^t matrix, so the t ket-copy indices come first
(copy 1 outermost) and the t bra-copy indices follow. With this convention
the Hilbert-Schmidt product <<A|B>> = tr(A^+ B) is ``np.vdot``.

Classes:
    PauliString: A tensor product of single-qubit Paulis, one per copy.
    OperatorKet: A vectorized operator.
    PermutationKet: The vectorized operator permuting t copies.
    LocalBasis: An orthonormal set of kets in the 4^t-dimensional local moment space.
"""

from typing import Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from moment_gap.models import ReadOnlyArray

PAULI_LETTERS = "IXYZ"


class PauliString(BaseModel):
    """
    A Pauli string on t copies of one qubit.

    Attributes:
        labels (Tuple[int, ...]): One symbol per copy, 0 for the identity and 1, 2, 3 for x, y, z.
    """

    model_config = ConfigDict(frozen=True)

    labels: Tuple[int, ...]

    @field_validator("labels")
    @classmethod
    def _check_labels(cls, labels: Tuple[int, ...]) -> Tuple[int, ...]:
        if not labels or any(label not in (0, 1, 2, 3) for label in labels):
            raise ValueError("labels must be a non-empty sequence over {0, 1, 2, 3}")
        return labels

    @property
    def t(self) -> int:
        return len(self.labels)

    @property
    def degree(self) -> int:
        return sum(1 for label in self.labels if label)

    @property
    def index(self) -> int:
        """Position in the Pauli basis: sum of p_c 4^(t-c), copy 1 most significant."""
        return int(np.ravel_multi_index(self.labels, (4,) * self.t))

    @property
    def label(self) -> str:
        return "".join(PAULI_LETTERS[label] for label in self.labels)

    @classmethod
    def from_label(cls, text: str) -> "PauliString":
        return cls(labels=tuple(PAULI_LETTERS.index(letter) for letter in text.upper()))

    @classmethod
    def from_index(cls, index: int, t: int) -> "PauliString":
        return cls(labels=tuple(int(label) for label in np.unravel_index(index, (4,) * t)))


class OperatorKet(BaseModel):
    """
    A vectorized operator |A>>.

    Attributes:
        coefficients (ReadOnlyArray): Complex vector of length local_dim^(2t).
        local_dim (int): Dimension of one copy.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coefficients: ReadOnlyArray
    local_dim: int = 2

    @property
    def t(self) -> int:
        return int(round(np.log(self.coefficients.size) / (2 * np.log(self.local_dim))))

    @property
    def side(self) -> int:
        return self.local_dim ** self.t

    def as_matrix(self) -> np.ndarray:
        return self.coefficients.reshape(self.side, self.side)

    def inner(self, other: "OperatorKet") -> complex:
        return complex(np.vdot(self.coefficients, other.coefficients))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def normalized(self) -> "OperatorKet":
        return OperatorKet(coefficients=self.coefficients / self.norm(), local_dim=self.local_dim)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, local_dim: int = 2) -> "OperatorKet":
        return cls(coefficients=np.asarray(matrix, dtype=complex).ravel(), local_dim=local_dim)


class PermutationKet(BaseModel):
    """
    The permutation operator sum_i |i_1..i_t><i_sigma(1)..i_sigma(t)| as a ket.

    Attributes:
        sigma (Tuple[int, ...]): Zero-based one-line notation.
        local_dim (int): Dimension of one copy (2 for a qubit, 4 for a qubit pair).
        ket (OperatorKet): Dense realization.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    sigma: Tuple[int, ...]
    local_dim: int
    ket: OperatorKet


class LocalBasis(BaseModel):
    """
    Orthonormal kets of the 4^t-dimensional single-qubit moment space.

    Attributes:
        kind (str): "pauli" for all Pauli strings, "u2_invariant" for the invariant commutant.
        t (int): Number of copies.
        vectors (ReadOnlyArray): Matrix of shape (4^t, size) whose columns are the kets.
        pauli_coordinates (ReadOnlyArray): The same columns expressed in the normalized Pauli basis.
        labels (Tuple[str, ...]): Human-readable name of each element.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: Literal["pauli", "u2_invariant"]
    t: int
    vectors: ReadOnlyArray
    pauli_coordinates: ReadOnlyArray
    labels: Tuple[str, ...]

    @property
    def size(self) -> int:
        return int(self.vectors.shape[1])

    def coordinates(self, ket: OperatorKet | np.ndarray) -> np.ndarray:
        coefficients = ket.coefficients if isinstance(ket, OperatorKet) else np.asarray(ket)
        return self.vectors.conj().T @ coefficients

    def element(self, index: int) -> OperatorKet:
        return OperatorKet(coefficients=self.vectors[:, index], local_dim=2)

    def pauli_tensor(self) -> np.ndarray:
        """Pauli coordinates reshaped to (4,)*t + (size,)."""
        return self.pauli_coordinates.reshape((4,) * self.t + (self.size,))
