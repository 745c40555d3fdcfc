"""
This module defines the data models of two-qubit gate averaging.

Classes:
    GateDistribution: Haar measure on U(4) or a weighted finite gate set.
    PauliTransferMatrix: Conjugation action of a two-qubit unitary on Pauli pairs.
    LocalMomentOperator: The averaged two-site superoperator in a local basis pair.
    GateEntry, GateSetFile: Schema of the JSON gate-set format.
"""

from functools import cached_property
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from moment_gap.api.components.moment_space.model import LocalBasis
from moment_gap.models import ReadOnlyArray

SWAP_TOLERANCE = 1e-10


class GateDistribution(BaseModel):
    """
    A probability distribution over two-qubit unitaries.

    Attributes:
        kind (str): "haar_u4" or "finite_set".
        name (str): Display name.
        gates (Optional[ReadOnlyArray]): Stack of shape (m, 4, 4) for finite sets.
        weights (Optional[ReadOnlyArray]): Probabilities of shape (m,) for finite sets.
        dagger_symmetrized (bool): Whether every gate's inverse carries the same weight.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: Literal["haar_u4", "finite_set"]
    name: str
    gates: Optional[ReadOnlyArray] = None
    weights: Optional[ReadOnlyArray] = None
    dagger_symmetrized: bool = True

    @property
    def size(self) -> int:
        return 0 if self.gates is None else int(self.gates.shape[0])

    @property
    def is_locally_invariant(self) -> bool:
        return self.kind == "haar_u4"


class PauliTransferMatrix(BaseModel):
    """
    R[(p',q'),(p,q)] = tr[(s_p' x s_q') U (s_p x s_q) U^+] / 4, index 4p + q.

    Attributes:
        entries (ReadOnlyArray): Real 16 x 16 orthogonal matrix.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: ReadOnlyArray

    def tensor(self) -> np.ndarray:
        """Entries reshaped to [p', q', p, q]."""
        return self.entries.reshape(4, 4, 4, 4)

    def image(self, p: int, q: int) -> np.ndarray:
        """Coefficients of U (s_p x s_q) U^+ over the 16 Pauli pairs."""
        return self.entries[:, 4 * p + q]

    def orthogonality_defect(self) -> float:
        return float(np.max(np.abs(self.entries @ self.entries.T - np.eye(16))))


class LocalMomentOperator(BaseModel):
    """
    The matrix <<e_a e_c| m_t |e_b e_d>> of the averaged two-site superoperator.

    Rows and columns are indexed by pairs, (a, c) -> a * size + c, with the first
    factor on the first site of the pair.

    Attributes:
        t (int): Moment order.
        basis (LocalBasis): The single-site basis used on both sites.
        matrix (ReadOnlyArray): Square matrix of side size^2.
        distribution (str): Name of the averaged distribution.
        asymmetry (float): max |A - A^+| before Hermitian symmetrization.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, ignored_types=(cached_property,))

    t: int
    basis: LocalBasis
    matrix: ReadOnlyArray
    distribution: str
    asymmetry: float = 0.0

    @property
    def size(self) -> int:
        return self.basis.size

    def coefficient_tensor(self) -> np.ndarray:
        """The matrix as c[a, c, b, d]."""
        size = self.size
        return self.matrix.reshape(size, size, size, size)

    def element(self, alpha: int, gamma: int, beta: int, delta: int) -> complex:
        size = self.size
        return complex(self.matrix[alpha * size + gamma, beta * size + delta])

    def _swap_index(self) -> np.ndarray:
        size = self.size
        return np.arange(size * size).reshape(size, size).T.ravel()

    @cached_property
    def swap_asymmetry(self) -> float:
        """max |m - S m S| where S exchanges the two sites, computed in row blocks."""
        order = self._swap_index()
        side = order.size
        step = max(1, (1 << 22) // side)
        worst = 0.0
        for start in range(0, side, step):
            rows = slice(start, min(side, start + step))
            swapped = self.matrix[order[rows]][:, order]
            worst = max(worst, float(np.max(np.abs(self.matrix[rows] - swapped))))
        return worst

    @property
    def is_swap_invariant(self) -> bool:
        return self.swap_asymmetry <= SWAP_TOLERANCE

    def swap_conjugate(self) -> "LocalMomentOperator":
        order = self._swap_index()
        return self.model_copy(update={"matrix": self.matrix[order][:, order]})

    def pair_symmetrized(self) -> "LocalMomentOperator":
        """The ordered-pair average (m + S m S) / 2; returns self when already swap-invariant."""
        if self.is_swap_invariant:
            return self
        order = self._swap_index()
        matrix = 0.5 * (self.matrix + self.matrix[order][:, order])
        return LocalMomentOperator(
            t=self.t, basis=self.basis, matrix=matrix, distribution=self.distribution, asymmetry=self.asymmetry
        )


class GateEntry(BaseModel):
    weight: float = Field(ge=0.0)
    matrix: List[List[Tuple[float, float]]]
    label: Optional[str] = None


class GateSetFile(BaseModel):
    """
    JSON gate-set file.

    Attributes:
        name (str): Name of the set.
        symmetric (bool): Whether the file already lists every inverse with equal weight.
        gates (List[GateEntry]): Weighted gates with [re, im] matrix entries.
    """

    name: str
    symmetric: bool = False
    gates: List[GateEntry] = Field(min_length=1)
