"""
This module defines the data model of the design-length calculator.

Classes:
    ConvergenceBound: Both forms of the depth after which the t-copy average is within epsilon of Haar.
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict


class ConvergenceBound(BaseModel):
    """
    Attributes:
        mode (str): "gap", "lambda1" or "asymptotic" (gap = a1 / n).
        gap (float): Delta_t used in the bound.
        n (int): Number of qubits.
        t (int): Moment order.
        epsilon (float): Target distance in the 1-norm.
        a1 (Optional[float]): Leading gap coefficient in asymptotic mode.
        bound (int): ceil((ln(1/eps) + n t ln 2) / Delta), the headline value.
        sharp_bound (int): ceil((ln(1/eps) + n t ln 2) / -ln(1 - Delta)).
        accuracy_term (float): ln(1/eps) / Delta.
        size_term (float): n t ln 2 / Delta.
    """

    model_config = ConfigDict(frozen=True)

    mode: Literal["gap", "lambda1", "asymptotic"]
    gap: float
    n: int
    t: int
    epsilon: float
    a1: Optional[float] = None
    bound: int
    sharp_bound: int
    accuracy_term: float
    size_term: float
