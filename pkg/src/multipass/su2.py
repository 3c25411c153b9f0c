"""
Single-pass propagators in Cayley-Klein form and their exact algebra.

A gate is the SU(2) matrix

    U = [[a, -b*],
         [b,  a*]],     |a|^2 + |b|^2 = 1,

acting on the basis (|1>, |2>). Starting in |1>, one pass leaves the system
in |1> with probability q = |a|^2 and transfers it to |2> with p = |b|^2.

The sign-flipped variants (Rabi frequency and/or detuning reversed) keep the
same pair (a, b):

    flip Omega:  [[a,  b*], [-b,  a*]]   -> pair (a, -b)
    flip Delta:  [[a*, b ], [-b*, a ]]   -> pair (a*, -b*)
    flip both:   [[a*, -b], [ b*, a ]]   -> pair (a*, b*)
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonUnitary

# Accepted norm defect at construction.
UNITARITY_TOL = 1e-9
# compose() wipes norm drift below this level; anything larger is left visible.
RENORM_TOL = 1e-12
# Below this |sin(theta)| the Dirichlet ratio switches to its series form.
SMALL_SIN = 1e-8


class GateVariant(enum.Enum):
    ORIGINAL = "Original"
    FLIP_OMEGA = "FlipOmega"
    FLIP_DELTA = "FlipDelta"
    FLIP_BOTH = "FlipBoth"

    @classmethod
    def parse(cls, tag: str | GateVariant) -> GateVariant:
        if isinstance(tag, cls):
            return tag
        for v in cls:
            if tag in (v.value, v.name):
                return v
        raise DomainError(f"unknown gate variant {tag!r}")


@dataclass(frozen=True)
class Su2Gate:
    """Immutable Cayley-Klein pair (a, b)."""

    a: complex
    b: complex

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        if not (cmath.isfinite(a) and cmath.isfinite(b)):
            raise DomainError("Cayley-Klein parameters must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        defect = self.norm_defect
        if abs(defect) > UNITARITY_TOL:
            raise NonUnitary(defect)

    @classmethod
    def _unchecked(cls, a: complex, b: complex) -> Su2Gate:
        # Used only by the product kernels, which police drift themselves.
        g = object.__new__(cls)
        object.__setattr__(g, "a", complex(a))
        object.__setattr__(g, "b", complex(b))
        return g

    @property
    def norm_defect(self) -> float:
        return abs(self.a) ** 2 + abs(self.b) ** 2 - 1.0

    @property
    def p(self) -> float:
        """Single-pass transition probability |b|^2."""
        return abs(self.b) ** 2

    @property
    def q(self) -> float:
        """Single-pass return probability |a|^2."""
        return abs(self.a) ** 2

    @property
    def matrix(self) -> np.ndarray:
        a, b = self.a, self.b
        return np.array([[a, -b.conjugate()], [b, a.conjugate()]], dtype=np.complex128)

    def to_dict(self) -> dict:
        return {
            "re_a": self.a.real,
            "im_a": self.a.imag,
            "re_b": self.b.real,
            "im_b": self.b.imag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Su2Gate:
        return make_gate(complex(d["re_a"], d["im_a"]), complex(d["re_b"], d["im_b"]))


IDENTITY = Su2Gate(1.0, 0.0)


def make_gate(a: complex, b: complex) -> Su2Gate:
    """Validated gate from a Cayley-Klein pair; raises NonUnitary on a norm defect above 1e-9."""
    return Su2Gate(a, b)


def from_probability_and_phases(p: float, xi: float, eta: float) -> Su2Gate:
    """
    Gate with transition probability ``p``, diagonal phase ``xi`` and
    off-diagonal phase ``eta``.

    This is the phase-gate parameterization

        [[ e^{i xi} sqrt(1-p),   e^{i eta} sqrt(p)  ],
         [-e^{-i eta} sqrt(p),   e^{-i xi} sqrt(1-p)]],

    i.e. a = e^{i xi} sqrt(1-p) and b = -e^{-i eta} sqrt(p).
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p={p} outside [0, 1]")
    a = cmath.exp(1j * xi) * math.sqrt(1.0 - p)
    b = -cmath.exp(-1j * eta) * math.sqrt(p)
    return Su2Gate(a, b)


def resonant_gate(pulse_area: float) -> Su2Gate:
    """
    Resonant pulse of area A: a = cos(A/2), b = -i sin(A/2).

    The phase of b follows exp(-i H t) with real positive Rabi frequency.
    No estimator depends on that choice.
    """
    if not math.isfinite(pulse_area):
        raise DomainError("pulse area must be finite")
    half = 0.5 * pulse_area
    return Su2Gate(math.cos(half), -1j * math.sin(half))


def rabi_gate(omega: float, delta: float, duration: float) -> Su2Gate:
    """Exact propagator for constant Rabi frequency and detuning.

    H = 1/2 [[-delta, omega], [omega, delta]], U = exp(-i H t).
    """
    if duration < 0:
        raise DomainError("duration must be non-negative")
    w = math.hypot(omega, delta)
    if w == 0.0:
        return IDENTITY
    half = 0.5 * w * duration
    s = math.sin(half)
    a = complex(math.cos(half), delta / w * s)
    b = complex(0.0, -omega / w * s)
    return Su2Gate(a, b)


def variant(g: Su2Gate, v: GateVariant | str) -> Su2Gate:
    v = GateVariant.parse(v)
    a, b = g.a, g.b
    if v is GateVariant.ORIGINAL:
        return g
    if v is GateVariant.FLIP_OMEGA:
        return Su2Gate._unchecked(a, -b)
    if v is GateVariant.FLIP_DELTA:
        return Su2Gate._unchecked(a.conjugate(), -b.conjugate())
    return Su2Gate._unchecked(a.conjugate(), b.conjugate())


def _mul(a2: complex, b2: complex, a1: complex, b1: complex) -> tuple[complex, complex]:
    # [[a2, -b2*], [b2, a2*]] @ [[a1, -b1*], [b1, a1*]], first column only
    return a2 * a1 - b2.conjugate() * b1, b2 * a1 + a2.conjugate() * b1


def compose(g2: Su2Gate, g1: Su2Gate) -> Su2Gate:
    """Matrix product ``g2 @ g1``; ``g1`` acts first."""
    a, b = _mul(g2.a, g2.b, g1.a, g1.b)
    defect = abs(a) ** 2 + abs(b) ** 2 - 1.0
    if defect != 0.0 and abs(defect) < RENORM_TOL:
        s = 1.0 / math.sqrt(1.0 + defect)
        a, b = a * s, b * s
    return Su2Gate._unchecked(a, b)


def _sin_cos(g: Su2Gate) -> tuple[float, float]:
    # sin(theta) from the imaginary/off-diagonal parts keeps full relative
    # precision when a_r is within a few ulp of +-1
    s = math.hypot(g.a.imag, abs(g.b))
    return s, g.a.real


def theta_of(g: Su2Gate) -> float:
    """Angle theta = arccos(Re a) in [0, pi].

    Evaluated as atan2(sqrt(Im(a)^2 + |b|^2), Re a), which equals the
    clamped arccos but does not lose digits near theta = 0 or pi.
    """
    s, c = _sin_cos(g)
    return math.atan2(s, c)


def chebyshev_terms(theta_sin: float, theta_cos: float, n: int) -> tuple[float, float]:
    """
    Return (cos(n theta), sin(n theta) / sin(theta)).

    The ratio is the Chebyshev polynomial U_{n-1}(cos theta). The angle is
    folded onto [0, pi/2] first so that the removable singularities at
    theta = 0 and theta = pi are both handled as the small-angle case.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    flip = theta_cos < 0.0
    phi = math.atan2(theta_sin, abs(theta_cos))
    if theta_sin < SMALL_SIN and n * phi < 1e-4:
        # U_{n-1}(cos phi) = n (1 - (n^2 - 1) phi^2 / 6 + O((n phi)^4))
        ratio = n * (1.0 - (n * n - 1.0) * phi * phi / 6.0)
        cos_n = math.cos(n * phi)
    else:
        ratio = math.sin(n * phi) / math.sin(phi)
        cos_n = math.cos(n * phi)
    if flip:
        # theta = pi - phi
        if n % 2:
            cos_n = -cos_n
        else:
            ratio = -ratio
    return cos_n, ratio


def power(g: Su2Gate, n: int) -> Su2Gate:
    """Closed-form n-th power of a gate (no repeated multiplication)."""
    if n < 1:
        raise DomainError("power requires n >= 1")
    if n == 1:
        return g
    s, c = _sin_cos(g)
    cos_n, ratio = chebyshev_terms(s, c, n)
    a = complex(cos_n, g.a.imag * ratio)
    b = g.b * ratio
    return Su2Gate._unchecked(a, b)
