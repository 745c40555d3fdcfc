"""
Depth bounds for approximate t-designs from the spectral gap.

The 1-norm distance of the depth-k average from the Haar average is at most
2^(nt) lambda1^k, so it drops below epsilon once
k >= (ln(1/eps) + nt ln 2) / -ln(lambda1); using -ln(1 - Delta) >= Delta
gives the looser closed form.
"""

import logging
import math

from moment_gap.exceptions import InvalidArgumentError
from .model import ConvergenceBound

logger = logging.getLogger(__name__)


def convergence_time_bound(
    n: int,
    t: int,
    epsilon: float,
    gap: float | None = None,
    lambda1: float | None = None,
    a1: float | None = None,
) -> ConvergenceBound:
    """
    Depth k_c after which the t-copy average is epsilon-close to Haar.

    Exactly one of gap, lambda1 (gap = 1 - lambda1) and a1 (gap = a1 / n) is given.

    Parameters:
    n (int): Number of qubits.
    t (int): Moment order.
    epsilon (float): Target distance, 0 < epsilon < 1.
    gap (float | None): Delta_t, 0 < Delta_t <= 1.
    lambda1 (float | None): Subleading eigenvalue.
    a1 (float | None): Leading gap coefficient, for the large-n asymptotic form.

    Returns:
    ConvergenceBound: Both bounds with the accuracy and size contributions.

    Raises:
    InvalidArgumentError: If the gap or epsilon is out of range, or not exactly one gap source is given.
    """
    sources = [value is not None for value in (gap, lambda1, a1)]
    if sum(sources) != 1:
        raise InvalidArgumentError("give exactly one of gap, lambda1 and a1")
    if n < 1 or t < 1:
        raise InvalidArgumentError(f"n and t must be positive, got n = {n}, t = {t}")
    if not 0 < epsilon < 1:
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {epsilon}")
    if gap is not None:
        mode = "gap"
    elif lambda1 is not None:
        mode, gap = "lambda1", 1.0 - lambda1
    else:
        mode, gap = "asymptotic", a1 / n
    if not 0 < gap <= 1:
        raise InvalidArgumentError(f"the gap must lie in (0, 1], got {gap}")

    accuracy = math.log(1 / epsilon)
    size = n * t * math.log(2)
    bound = math.ceil((accuracy + size) / gap)
    # lambda1 = 0 reaches the Haar average after one layer
    sharp = 1 if gap == 1 else math.ceil((accuracy + size) / -math.log1p(-gap))
    logger.info("k_c for gap %.6g, n = %d, t = %d, epsilon = %.3g: %d (sharp %d)", gap, n, t, epsilon, bound, sharp)
    return ConvergenceBound(
        mode=mode,
        gap=gap,
        n=n,
        t=t,
        epsilon=epsilon,
        a1=a1,
        bound=bound,
        sharp_bound=sharp,
        accuracy_term=accuracy / gap,
        size_term=size / gap,
    )
