"""
This module defines the data models of the invariants self-test.

Classes:
    SelfTestCheck: Outcome of one named property check.
    SelfTestReport: All checks of one run.
"""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict


class SelfTestCheck(BaseModel):
    """
    Attributes:
        name (str): Check identifier, e.g. "fixed_points".
        t (Optional[int]): Moment order the check ran at, if any.
        passed (bool): Outcome.
        value (Optional[float]): The measured quantity, usually a worst-case deviation.
        tolerance (Optional[float]): The threshold the value was held to.
        detail (str): Human-readable context or the error message.
    """

    model_config = ConfigDict(frozen=True)

    name: str
    t: Optional[int] = None
    passed: bool
    value: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""


class SelfTestReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    t_max: int
    checks: List[SelfTestCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[SelfTestCheck]:
        return [check for check in self.checks if not check.passed]
