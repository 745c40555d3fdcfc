"""
This module defines the data models of the mean-field (spin-wave) analysis.

Classes:
    ExcitationMatrix: E or E~ over the complement of a reference permutation ket.
    BandMinimum: Smallest eigenvalue of one excitation matrix with a witness.
    GapPrediction: The leading gap coefficient a1 and the bands it was taken over.
    PolynomialCheck: One evaluation of the canonical-gate polynomial bound.
    WitnessCheck: Whether a two-qubit rotation changes a witness ket.
    GapScanRow, GapScan: Exact sector gaps against the a1 / n prediction.
"""

from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from moment_gap.models import ReadOnlyArray

Band = Literal["symmetric_band", "antisymmetric_band"]


class ExcitationMatrix(BaseModel):
    """
    Attributes:
        kind (Band): Which band the matrix describes.
        sigma (Tuple[int, ...]): The reference permutation.
        matrix (ReadOnlyArray): Hermitian matrix over the complement of |sigma>>.
        complement (ReadOnlyArray): Local-basis coordinates of the complement, one column per row of the matrix.
        basis_kind (str): Kind of the local basis.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: Band
    sigma: Tuple[int, ...]
    matrix: ReadOnlyArray
    complement: ReadOnlyArray = Field(exclude=True)
    basis_kind: str

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[0])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


class BandMinimum(BaseModel):
    """
    Attributes:
        kind (Band): The band.
        sigma (Tuple[int, ...]): The reference permutation.
        value (float): Smallest eigenvalue.
        multiplicity (int): Numerical multiplicity of the minimum.
        witness (Dict[str, float]): Phase-fixed eigenvector as Pauli-string coefficients.
    """

    model_config = ConfigDict(frozen=True)

    kind: Band
    sigma: Tuple[int, ...]
    value: float
    multiplicity: int
    witness: Dict[str, float]


class GapPrediction(BaseModel):
    """
    Attributes:
        a1 (float): Leading coefficient of the gap, Delta ~ a1 / n.
        band (Band): Band that attains a1.
        sigma (Tuple[int, ...]): Reference permutation that attains a1.
        witness (Dict[str, float]): Eigenvector attaining a1, in Pauli strings.
        multiplicity (int): Multiplicity of the minimum.
        bands (List[BandMinimum]): Every band and permutation examined.
        antisymmetric_included (bool): Whether the antisymmetric band entered the minimum.
        restricted (bool): True when the scan ran over the invariant subspace only.
        t (int): Moment order.
        distribution (str): Name of the averaged distribution.
    """

    model_config = ConfigDict(frozen=True)

    a1: float
    band: Band
    sigma: Tuple[int, ...]
    witness: Dict[str, float]
    multiplicity: int
    bands: List[BandMinimum]
    antisymmetric_included: bool
    restricted: bool
    t: int
    distribution: str

    @property
    def universal(self) -> bool:
        return self.a1 > 1e-9

    def predicted_gap(self, n: int) -> float:
        return self.a1 / n


class PolynomialCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    term: Literal["direct", "exchange"]
    lhs: float
    bound: float
    x: float
    y: float
    z: float

    @property
    def satisfied(self) -> bool:
        return self.lhs <= self.bound + 1e-9


class WitnessCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    labels: str
    generator: Literal["zz", "xx"]
    applicable: bool
    difference: float

    @property
    def changed(self) -> bool:
        return self.difference > 1e-6


class GapScanRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    dim: int
    unit_multiplicity: int
    lambda1: float
    gap: float
    meanfield_prediction: float
    rel_dev: float


class GapScan(BaseModel):
    """
    Attributes:
        distribution (str): Name of the averaged distribution.
        t (int): Moment order.
        basis_kind (str): Local basis of the sector computations.
        prediction (GapPrediction): The mean-field coefficient used for the predictions.
        rows (List[GapScanRow]): One row per n, in the order requested.
        crossover_n (Optional[int]): n after which the relative deviation decreases monotonically.
        tail_slope (Optional[float]): Slope of 1/Delta against n from the crossover on.
    """

    model_config = ConfigDict(frozen=True)

    distribution: str
    t: int
    basis_kind: str
    prediction: GapPrediction
    rows: List[GapScanRow]
    crossover_n: Optional[int] = None
    tail_slope: Optional[float] = None
