"""
Closed-form multi-pass populations.

Q is the return probability to |1>, P the transfer probability to |2>, both
after N passes starting from |1>. Exact forms are always available; the
leading-order expansions in ``asymptotic_populations`` exist for comparison
and for reasoning about pass counts.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError
from .su2 import Su2Gate, chebyshev_terms, power

# Asymptotic expansions are only offered for |eps| up to this value.
ASYMPTOTIC_EPS_MAX = 0.05


@dataclass(frozen=True)
class MultiPassResult:
    n_passes: int
    q_return: float
    p_transfer: float
    propagator: Optional[Su2Gate] = None

    def __post_init__(self):
        if abs(self.q_return + self.p_transfer - 1.0) > 1e-12:
            raise DomainError("populations do not sum to one")

    @classmethod
    def from_gate(cls, n_passes: int, g: Su2Gate) -> MultiPassResult:
        q, p = g.q, g.p
        # renormalize populations only; the propagator keeps its drift
        total = q + p
        return cls(n_passes, q / total, p / total, g)


class Branch(enum.Enum):
    LARGE_P_EVEN = "LargeP_even"
    LARGE_P_ODD = "LargeP_odd"
    SMALL_P = "SmallP"
    HALF_4K = "Half_4k"
    HALF_4K1 = "Half_4k1"
    HALF_4K2 = "Half_4k2"
    HALF_4K3 = "Half_4k3"


@dataclass(frozen=True)
class AsymptoticBranch:
    label: Branch
    value: float
    leading_order: str


def _check_p(p: float):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p={p} outside [0, 1]")


def _check_n(n: int):
    if int(n) != n or n < 1:
        raise DomainError(f"number of passes must be a positive integer, got {n}")


def classical_populations(p: float, n: int) -> MultiPassResult:
    """Incoherent populations after n passes: Q = [1 + (1 - 2p)^n] / 2."""
    _check_p(p)
    _check_n(n)
    r = (1.0 - 2.0 * p) ** n
    return MultiPassResult(n, 0.5 * (1.0 + r), 0.5 * (1.0 - r))


def quantum_populations(g: Su2Gate, n: int) -> MultiPassResult:
    """Exact coherent populations, P_N = p sin^2(N theta) / sin^2(theta)."""
    _check_n(n)
    return MultiPassResult.from_gate(n, power(g, n))


def real_a_angle(p: float) -> float:
    """theta = arccos(sqrt(1 - p)) for a real, non-negative a."""
    _check_p(p)
    return math.atan2(math.sqrt(p), math.sqrt(1.0 - p))


def chebyshev_populations_real_a(p: float, n: int) -> MultiPassResult:
    """Q_N = cos^2(N arccos sqrt(q)) = T_N(sqrt(q))^2 for real a."""
    _check_n(n)
    x = n * real_a_angle(p)
    return MultiPassResult(n, math.cos(x) ** 2, math.sin(x) ** 2)


def imaginary_b_populations(p: float, m_pairs: int) -> MultiPassResult:
    """
    Populations after m pairs of (gate, Delta-flipped gate) when b is purely
    imaginary: P_2M = sin^2(M theta) with theta = arccos(1 - 2p).
    """
    _check_p(p)
    _check_n(m_pairs)
    # cos(theta) = 1 - 2p, sin(theta) = 2 sqrt(p (1 - p))
    s = 2.0 * math.sqrt(p * (1.0 - p))
    cos_m, ratio = chebyshev_terms(s, 1.0 - 2.0 * p, m_pairs)
    p_out = s * s * ratio * ratio
    return MultiPassResult(2 * m_pairs, 1.0 - p_out, p_out)


def asymptotic_populations(p0: float, epsilon: float, n: int) -> AsymptoticBranch:
    """
    Leading-order return probability Q_N near p0 in {1, 0, 1/2}.

    The single-pass probability is p = 1 - eps, p = eps or p = 1/2 - eps
    respectively. For p0 = 1/2 the branch is chosen by N mod 4.
    """
    _check_n(n)
    if abs(epsilon) > ASYMPTOTIC_EPS_MAX:
        raise DomainError(f"|eps|={abs(epsilon)} too large for a leading-order expansion")
    n2e = n * n * epsilon
    if p0 == 1:
        if n % 2 == 0:
            return AsymptoticBranch(Branch.LARGE_P_EVEN, 1.0 - n2e, "1 - N^2 eps")
        return AsymptoticBranch(Branch.LARGE_P_ODD, n2e, "N^2 eps")
    if p0 == 0:
        if epsilon < 0:
            raise DomainError("p = eps requires eps >= 0")
        return AsymptoticBranch(Branch.SMALL_P, 1.0 - n2e, "1 - N^2 eps")
    if p0 == 0.5:
        ne = n * epsilon
        r = n % 4
        if r == 0:
            return AsymptoticBranch(Branch.HALF_4K, 1.0 - ne * ne, "1 - N^2 eps^2")
        if r == 1:
            return AsymptoticBranch(Branch.HALF_4K1, 0.5 + ne, "1/2 + N eps")
        if r == 2:
            return AsymptoticBranch(Branch.HALF_4K2, ne * ne, "N^2 eps^2")
        return AsymptoticBranch(Branch.HALF_4K3, 0.5 - ne, "1/2 - N eps")
    raise DomainError(f"no expansion around p0={p0}; supported: 1, 0, 1/2")


def amplification_passes(epsilon: float) -> int:
    """Pass count floor(1 / sqrt(2 eps)) that lifts an error eps to about 1/2."""
    if not 0.0 < epsilon <= 0.5:
        raise DomainError(f"eps={epsilon} outside (0, 1/2]")
    return math.floor(1.0 / math.sqrt(2.0 * epsilon))


def half_probability_passes(epsilon: float) -> int:
    """Order-of-magnitude pass count 1/(4 eps) for the linear p = 1/2 - eps branches."""
    if not 0.0 < epsilon < 0.5:
        raise DomainError(f"eps={epsilon} outside (0, 1/2)")
    return round(1.0 / (4.0 * epsilon))
