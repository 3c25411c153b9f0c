"""Exception types raised by the library.

Every estimator blind spot has its own type so callers (and the CLI exit
codes) can tell a regime problem from a malformed input.
"""


class MultipassError(Exception):
    """Base class for all library errors."""


class DomainError(MultipassError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class NonUnitary(DomainError):
    """Cayley-Klein pair does not satisfy |a|^2 + |b|^2 = 1."""

    def __init__(self, defect: float):
        self.defect = defect
        super().__init__(f"|a|^2 + |b|^2 - 1 = {defect:.3e} exceeds tolerance")


class NumericalDrift(MultipassError):
    """Accumulated norm defect of a long product exceeded the drift budget."""


class ConfigError(MultipassError, ValueError):
    """Malformed experiment configuration."""


class EstimatorError(MultipassError):
    """Base class for failures of the recovery protocols."""


class Ambiguous(EstimatorError):
    """Data is consistent with more than one branch."""


class NoSolution(EstimatorError):
    """No single-pass parameter reproduces the measured value."""


class Inconsistent(EstimatorError):
    """Two independent relations disagree beyond tolerance."""


class DegenerateDenominator(EstimatorError):
    """A probability used as a denominator is too small to divide by."""


class BranchAliasing(EstimatorError):
    """The principal arccos branch does not reproduce the measured data."""


class RegimeViolation(EstimatorError):
    """Inputs lie outside the validity regime of a leading-order protocol."""
