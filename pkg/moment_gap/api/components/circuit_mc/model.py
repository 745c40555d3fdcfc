"""
This module defines the data models of the Monte Carlo circuit validation.

Classes:
    CircuitStep: One gate applied to an ordered qubit pair.
    CircuitSample: A sampled random circuit.
    CorrelatorEstimate: Replica mean and standard error of a t-copy correlator at one depth.
    DecayEstimate: Fitted decay rate of the correlator signal against depth.
"""

from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from moment_gap.models import ReadOnlyArray


class CircuitStep(BaseModel):
    """
    Attributes:
        pair (Tuple[int, int]): Qubits i < j the gate acts on.
        gate (ReadOnlyArray): 4 x 4 unitary with its first factor on qubit i.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pair: Tuple[int, int]
    gate: ReadOnlyArray


class CircuitSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    steps: List[CircuitStep]
    seed: int
    provenance_id: str

    @property
    def depth(self) -> int:
        return len(self.steps)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Pairs of shape (1, k, 2) and gates of shape (1, k, 4, 4)."""
        pairs = np.array([step.pair for step in self.steps], dtype=np.int64).reshape(1, -1, 2)
        gates = np.array([step.gate for step in self.steps], dtype=complex).reshape(1, -1, 4, 4)
        return pairs, gates


class CorrelatorEstimate(BaseModel):
    """
    Attributes:
        depth (int): Circuit depth k.
        mean (float): Replica mean of prod_c Re tr(B_c^+ U A_c U^+).
        stderr (float): Standard error of the mean.
        replicas (int): Number of independent circuits.
        signal (float): mean minus the Haar fixed-point value.
    """

    model_config = ConfigDict(frozen=True)

    depth: int
    mean: float
    stderr: float
    replicas: int
    signal: float = 0.0

    def with_reference(self, value: float) -> "CorrelatorEstimate":
        return self.model_copy(update={"signal": self.mean - value})


class DecayEstimate(BaseModel):
    """
    Attributes:
        depths (List[int]): Depths in the fit grid.
        means (List[float]): Correlator means.
        stderrs (List[float]): Standard errors.
        signals (List[float]): Means minus the fixed-point value.
        used_in_fit (List[bool]): Whether each depth passed the signal filter.
        rate (float): Fitted rate rho.
        rate_stderr (float): Standard deviation of rho from the fit covariance.
        ci_low (float): Lower end of the confidence interval.
        ci_high (float): Upper end of the confidence interval.
        confidence (float): Level of the interval.
        amplitude (float): Fitted prefactor c in c rho^k.
        reference_rate (Optional[float]): lambda1 = 1 - Delta from the exact sector.
        consistent (Optional[bool]): Verdict against the reference.
        burn_in (int): Depths below this were left out of the fit.
        subleading_rate (Optional[float]): Largest |eigenvalue| of the sector below lambda1.
        twirl (str): Initial layer used for the correlators.
    """

    model_config = ConfigDict(frozen=True)

    depths: List[int]
    means: List[float]
    stderrs: List[float]
    signals: List[float]
    used_in_fit: List[bool]
    rate: float
    rate_stderr: float
    ci_low: float
    ci_high: float
    confidence: float
    amplitude: float
    reference_rate: Optional[float] = None
    consistent: Optional[bool] = None
    burn_in: int = 0
    subleading_rate: Optional[float] = None
    twirl: str = "none"
