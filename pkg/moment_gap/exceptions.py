"""
This module defines the exception hierarchy shared by every component.

Lower layers raise these errors with the offending values attached; they
travel unchanged through the services and are converted into console
messages and exit codes only by the command middleware.

Classes:
    MomentGapError: Base class for all domain errors.
    ConfigurationError: Invalid settings or configuration overlay.
    DimensionCapError: A dense object or Fock sector would exceed a cap.
    ToleranceError: A numerical consistency check failed its tolerance.
    NonUnitaryGateError: A supplied gate is not unitary.
    GateSetError: A gate-set file or finite distribution is malformed.
    UnsupportedDistributionError: The requested averaging is not supported.
    BasisMismatchError: Operands are expressed in incompatible local bases.
    NotFixedPointError: A permutation ket is not fixed by the local average.
    DeflationError: A supplied deflation vector is not an eigenvalue-1 vector.
    ConvergenceError: The iterative eigensolver did not converge.
    InsufficientSignalError: Too few depths survive the decay-fit filter.
    NotInvariantError: An operator expected to be U(2)-invariant is not.
    InvalidArgumentError: An argument lies outside its admissible range.
"""


class MomentGapError(Exception):
    """Base class for moment-gap errors."""


class ConfigurationError(MomentGapError):
    """Raised when settings or a configuration overlay cannot be applied."""


class DimensionCapError(MomentGapError):
    """Raised when a requested object would exceed a configured size cap."""

    def __init__(self, what: str, size: int, cap: int):
        super().__init__(f"{what} has size {size}, above the configured cap {cap}")
        self.what = what
        self.size = size
        self.cap = cap


class ToleranceError(MomentGapError):
    """Raised when a numerical check exceeds its tolerance."""

    def __init__(self, what: str, value: float, tolerance: float):
        super().__init__(f"{what}: {value:.3e} exceeds tolerance {tolerance:.1e}")
        self.what = what
        self.value = value
        self.tolerance = tolerance


class NonUnitaryGateError(MomentGapError):
    """Raised when a gate deviates from unitarity."""

    def __init__(self, deviation: float, tolerance: float, index: int | None = None):
        where = "" if index is None else f" (gate {index})"
        super().__init__(
            f"gate is not unitary{where}: |U U^+ - I| = {deviation:.3e} > {tolerance:.1e}"
        )
        self.deviation = deviation
        self.index = index


class GateSetError(MomentGapError):
    """Raised for malformed gate sets and finite distributions."""


class UnsupportedDistributionError(MomentGapError):
    """Raised when a distribution cannot be averaged at the requested order."""


class BasisMismatchError(MomentGapError):
    """Raised when operands do not share a compatible local basis."""


class NotFixedPointError(MomentGapError):
    """Raised when a reference permutation ket is not fixed by the local average."""

    def __init__(self, sigma: tuple, residual: float):
        super().__init__(
            f"permutation {sigma} is not a fixed point of the local moment operator "
            f"(residual {residual:.3e}); check the distribution"
        )
        self.sigma = sigma
        self.residual = residual


class DeflationError(MomentGapError):
    """Raised when a supplied fixed vector is not an eigenvalue-1 eigenvector."""

    def __init__(self, index: int, residual: float):
        super().__init__(
            f"fixed vector {index} has |Mv - v| = {residual:.3e}; the assembly is inconsistent"
        )
        self.index = index
        self.residual = residual


class ConvergenceError(MomentGapError):
    """Raised when the iterative eigensolver gives up."""


class InsufficientSignalError(MomentGapError):
    """Raised when fewer than the required number of depths carry signal."""

    def __init__(self, usable: int, required: int):
        super().__init__(
            f"only {usable} depths pass the signal filter, {required} are required"
        )
        self.usable = usable
        self.required = required


class NotInvariantError(MomentGapError):
    """Raised when an operator fails the U(2) twirl test."""


class InvalidArgumentError(MomentGapError):
    """Raised when an argument is outside its admissible range."""
