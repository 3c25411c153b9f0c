"""
Recovery of single-pass gate errors from amplified multi-pass probabilities.

All estimators take probabilities, not shot records, so they can be tested
against exact inputs. Notation: P^{s+}_{2M} is the transition probability
after M repetitions of the pair (original gate, then the variant with Rabi
frequency sign s), P^{+-}/P^{--} use the detuning-flipped variants.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .closed_form import real_a_angle
from .errors import (
    Ambiguous,
    BranchAliasing,
    DegenerateDenominator,
    DomainError,
    Inconsistent,
    NoSolution,
    RegimeViolation,
)
from .sequences import PairKind, evaluate_fast, pair_sequence
from .su2 import from_probability_and_phases

EXACT_TOL = 1e-9
PHASE_TOL = 1e-3
SUM_GUARD = 0.5
DENOMINATOR_FLOOR = 1e-12


class Method(enum.Enum):
    REAL_A = "RealA"
    SUM_LARGE_P = "SumLargeP"
    RATIO_GENERAL = "RatioGeneral"
    PHASE_GATE_SUM = "PhaseGateSum"
    PHASE_GATE_PEAK = "PhaseGatePeak"

    @classmethod
    def parse(cls, tag: Union[str, "Method"]) -> "Method":
        if isinstance(tag, cls):
            return tag
        for m in cls:
            if tag in (m.value, m.name):
                return m
        raise DomainError(f"unknown method {tag!r}")


@dataclass(frozen=True)
class ErrorEstimate:
    p_hat: float
    epsilon_hat: float
    method: Method
    residual: float = 0.0
    xi_hat: Optional[float] = None
    gamma_hat: Optional[float] = None
    eta_hat: Optional[float] = None
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.p_hat <= 1.0:
            raise DomainError(f"p_hat={self.p_hat} outside [0, 1]")
        if not math.isfinite(self.residual):
            raise DomainError("residual must be finite")

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "p_hat": self.p_hat,
            "epsilon_hat": self.epsilon_hat,
            "xi_hat": self.xi_hat,
            "gamma_hat": self.gamma_hat,
            "eta_hat": self.eta_hat,
            "residual": self.residual,
            "inputs": dict(self.inputs),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# -- real a -------------------------------------------------------------------


class Hint(enum.Enum):
    NEAR_ONE = "NearOne"
    NEAR_ZERO = "NearZero"


@dataclass(frozen=True)
class TwoPoint:
    """A second measurement of the same observable after ``n_passes`` passes.

    The second pass count must not be a multiple of the first: Q_{kN} is a
    polynomial in Q_N for real a and carries no branch information.
    """

    value: float
    n_passes: int


def _check_prob(name: str, x: float, slack: float = 1e-12) -> float:
    if not (-slack <= x <= 1.0 + slack):
        raise DomainError(f"{name}={x} is not a probability")
    return min(max(x, 0.0), 1.0)


def real_a_candidates(q_n: float, n: int) -> list[float]:
    """All angles theta in [0, pi/2] with cos^2(n theta) = q_n, ascending."""
    c = math.atan2(math.sqrt(1.0 - q_n), math.sqrt(q_n))
    half_pi = 0.5 * math.pi
    out = []
    for j in range(0, n // 2 + 2):
        for t in ((j * math.pi - c) / n, (j * math.pi + c) / n):
            if -1e-15 <= t <= half_pi + 1e-15:
                t = min(max(t, 0.0), half_pi)
                if not out or all(abs(t - u) > 1e-14 for u in out):
                    out.append(t)
    return sorted(out)


def invert_real_a(
    value: float,
    n: int,
    hint: Union[Hint, TwoPoint] = Hint.NEAR_ONE,
    observable: str = "Q",
    tol: float = EXACT_TOL,
) -> ErrorEstimate:
    """
    Single-pass transition probability of a real-a gate from its n-pass
    return (``observable="Q"``) or transition (``"P"``) probability.

    The inverse is multivalued. ``NEAR_ONE`` keeps the largest candidate p,
    ``NEAR_ZERO`` the smallest, and a ``TwoPoint`` hint keeps the candidate
    that reproduces a second measurement of the same observable.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if observable not in ("Q", "P"):
        raise DomainError("observable must be 'Q' or 'P'")
    if not (-1e-12 <= value <= 1.0 + 1e-12):
        raise NoSolution(f"{observable}_N={value} is not reachable by any p")
    value = min(max(value, 0.0), 1.0)
    q_n = value if observable == "Q" else 1.0 - value
    thetas = real_a_candidates(q_n, n)

    def q_after(theta, k):
        return math.cos(k * theta) ** 2

    def obs_after(theta, k):
        qk = q_after(theta, k)
        return qk if observable == "Q" else 1.0 - qk

    if isinstance(hint, TwoPoint):
        if hint.n_passes < 1:
            raise DomainError("second pass count must be >= 1")
        target = _check_prob("second value", hint.value)
        scored = sorted((abs(obs_after(t, hint.n_passes) - target), t) for t in thetas)
        matches = [t for d, t in scored if d <= tol]
        if not matches:
            raise NoSolution(
                f"no branch reproduces the value after {hint.n_passes} passes "
                f"(best mismatch {scored[0][0]:.3e})"
            )
        ps = [math.sin(t) ** 2 for t in matches]
        if max(ps) - min(ps) > tol:
            raise Ambiguous(f"{len(matches)} branches reproduce both measurements: p in {sorted(ps)}")
        theta = scored[0][1]
        residual = scored[0][0]
        hint_tag = {"TwoPoint": {"value": hint.value, "n_passes": hint.n_passes}}
    else:
        hint = Hint(hint) if not isinstance(hint, Hint) else hint
        theta = thetas[-1] if hint is Hint.NEAR_ONE else thetas[0]
        residual = abs(obs_after(theta, n) - value)
        hint_tag = hint.value

    p_hat = math.sin(theta) ** 2
    q_hat = math.cos(theta) ** 2
    near_one = hint is Hint.NEAR_ONE or (not isinstance(hint, Hint) and p_hat >= 0.5)
    return ErrorEstimate(
        p_hat=p_hat,
        epsilon_hat=q_hat if near_one else p_hat,
        method=Method.REAL_A,
        residual=residual,
        inputs={"value": value, "observable": observable, "n": n, "hint": hint_tag},
    )


def real_a_sensitivity(p: float, n: int) -> float:
    """dQ_N/dp for a real-a gate, -n sin(2n theta) / sin(2 theta)."""
    theta = real_a_angle(p)
    s2 = math.sin(2.0 * theta)
    if s2 == 0.0:
        # p = 0 gives -n^2, p = 1 gives (-1)^n n^2
        return -n * n if theta < 0.25 * math.pi else (-1) ** n * n * n
    return -n * math.sin(2.0 * n * theta) / s2


def real_a_stderr(p_hat: float, n: int, prob_stderr: float) -> float:
    """Delta-method standard error of p_hat given the standard error of Q_N (or P_N)."""
    d = abs(real_a_sensitivity(p_hat, n))
    if d == 0.0:
        return math.inf
    return prob_stderr / d


# -- forward models used for residuals ----------------------------------------


def pair_transition(p: float, xi: float, eta: float, kind: PairKind, m: int) -> float:
    g = from_probability_and_phases(min(max(p, 0.0), 1.0), xi, eta)
    return evaluate_fast(pair_sequence(g, kind, m)).p_transfer


# -- general case, p = 1 - eps ---------------------------------------------------


def estimate_sum_large_p(p_pp: float, p_mp: float, m: int) -> ErrorEstimate:
    """
    eps ~ (P^{++}_{2M} + P^{-+}_{2M}) / (4 M^2) for p = 1 - eps.

    Leading order only, so the combined probability must stay below 1/2.
    The Stueckelberg phase follows from tan^2(xi) = P^{-+} / P^{++}.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    p_pp = _check_prob("P++", p_pp)
    p_mp = _check_prob("P-+", p_mp)
    total = p_pp + p_mp
    if total > SUM_GUARD:
        raise RegimeViolation(f"P++ + P-+ = {total:.4g} > {SUM_GUARD}: M^2 eps too large")
    eps = total / (4.0 * m * m)
    if eps > 1.0:
        raise RegimeViolation("eps estimate exceeds 1")
    xi = math.atan2(math.sqrt(p_mp), math.sqrt(p_pp)) if total > 0 else None
    residual = 0.0
    if xi is not None:
        pred = pair_transition(1.0 - eps, xi, 0.0, PairKind.PLUS_PLUS, m) + pair_transition(
            1.0 - eps, xi, 0.0, PairKind.MINUS_PLUS, m
        )
        residual = abs(pred - total)
    return ErrorEstimate(
        p_hat=1.0 - eps,
        epsilon_hat=eps,
        method=Method.SUM_LARGE_P,
        residual=residual,
        xi_hat=xi,
        inputs={"p_pp": p_pp, "p_mp": p_mp, "m": m},
    )


# -- general case, any p ---------------------------------------------------------


def _pair_theta(p_2m: float, p_4m: float, m: int, label: str) -> float:
    if p_2m < DENOMINATOR_FLOOR:
        raise DegenerateDenominator(
            f"P{label}_2M = {p_2m:.3e}: sin(M theta) ~ 0, the ratio carries no information"
        )
    r = p_4m / p_2m
    c = min(max(0.5 * r - 1.0, -1.0), 1.0)
    return math.acos(c) / (2.0 * m)


def estimate_ratio_general(
    p_2m_pp: float,
    p_4m_pp: float,
    p_2m_mp: float,
    p_4m_mp: float,
    m: int,
    alias_tol: float = 1e-6,
) -> ErrorEstimate:
    """
    Any single-pass p from the ratios R = P_{4M} / P_{2M} = 4 cos^2(M theta)
    of the ++ and -+ pair sequences.

    theta_pm = arccos(R/2 - 1) / (2M) is only the principal branch. The
    recovered (p, xi) are pushed back through the forward model and
    BranchAliasing is raised when they do not reproduce P_{2M} to within
    ``alias_tol`` (relative).
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    vals = [_check_prob(n, x) for n, x in
            (("P++_2M", p_2m_pp), ("P++_4M", p_4m_pp), ("P-+_2M", p_2m_mp), ("P-+_4M", p_4m_mp))]
    p_2m_pp, p_4m_pp, p_2m_mp, p_4m_mp = vals
    th_p = _pair_theta(p_2m_pp, p_4m_pp, m, "++")
    th_m = _pair_theta(p_2m_mp, p_4m_mp, m, "-+")
    cp, cm = math.cos(th_p), math.cos(th_m)
    p_hat = 0.5 * (cm - cp)
    inputs = {"p_2m_pp": p_2m_pp, "p_4m_pp": p_4m_pp, "p_2m_mp": p_2m_mp, "p_4m_mp": p_4m_mp, "m": m}
    if not (-alias_tol <= p_hat <= 1.0 + alias_tol):
        raise BranchAliasing(f"principal branch gives p={p_hat:.6g} outside [0, 1]")
    p_hat = min(max(p_hat, 0.0), 1.0)
    q_hat = 1.0 - p_hat
    qcos2xi = 0.5 * (cp + cm)
    if q_hat > 0:
        cos2xi = qcos2xi / q_hat
        if abs(cos2xi) > 1.0 + alias_tol:
            raise BranchAliasing(f"principal branch gives cos(2 xi)={cos2xi:.6g}")
        xi = 0.5 * math.acos(min(max(cos2xi, -1.0), 1.0))
    else:
        xi = 0.0

    pred_pp = pair_transition(p_hat, xi, 0.0, PairKind.PLUS_PLUS, m)
    pred_mp = pair_transition(p_hat, xi, 0.0, PairKind.MINUS_PLUS, m)
    rel = max(abs(pred_pp - p_2m_pp) / p_2m_pp, abs(pred_mp - p_2m_mp) / p_2m_mp)
    if rel > alias_tol:
        raise BranchAliasing(
            f"forward check misses P_2M by {rel:.3e} (relative): 2 M theta likely exceeds pi"
        )
    return ErrorEstimate(
        p_hat=p_hat,
        epsilon_hat=min(p_hat, q_hat),
        method=Method.RATIO_GENERAL,
        residual=rel,
        xi_hat=xi,
        inputs=inputs,
    )


# -- phase gate, p = eps ---------------------------------------------------------


def estimate_phase_gate_sum(p_pm: float, p_mm: float, m: int) -> ErrorEstimate:
    """
    Leakage eps ~ (P^{+-}_{2M} + P^{--}_{2M}) / (4 M^2) of a phase gate and the
    off-diagonal phase from sin^2(eta) = P^{+-} / (P^{+-} + P^{--}).
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    p_pm = _check_prob("P+-", p_pm)
    p_mm = _check_prob("P--", p_mm)
    total = p_pm + p_mm
    if total > SUM_GUARD:
        raise RegimeViolation(f"P+- + P-- = {total:.4g} > {SUM_GUARD}: M^2 eps too large")
    eps = total / (4.0 * m * m)
    eta = None
    residual = 0.0
    if total > 0:
        eta = math.asin(math.sqrt(p_pm / total))
        pred = pair_transition(eps, 0.0, eta, PairKind.PLUS_MINUS, m) + pair_transition(
            eps, 0.0, eta, PairKind.MINUS_MINUS, m
        )
        residual = abs(pred - total)
    return ErrorEstimate(
        p_hat=eps,
        epsilon_hat=eps,
        method=Method.PHASE_GATE_SUM,
        residual=residual,
        eta_hat=eta,
        inputs={"p_pm": p_pm, "p_mm": p_mm, "m": m},
    )


def estimate_phase_xi(
    p_pp: float, p_mp: float, epsilon_hat: float, m: int, tol: float = PHASE_TOL
) -> list[float]:
    """
    Candidate diagonal phases xi in [0, pi) of a low-leakage gate.

    sin^2(2 M xi) = [P^{++} P^{-+} / (P^{++} + P^{-+})] / eps yields a comb of
    aliases; sin^2(xi) = P^{-+} / (P^{++} + P^{-+}) (the tan^2 relation)
    keeps those that agree within ``tol``. xi and xi + pi give identical
    data, so only [0, pi) is reported.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    if epsilon_hat <= 0:
        raise DomainError("epsilon_hat must be positive")
    p_pp = _check_prob("P++", p_pp)
    p_mp = _check_prob("P-+", p_mp)
    total = p_pp + p_mp
    if total <= DENOMINATOR_FLOOR:
        raise DegenerateDenominator("P++ + P-+ vanishes")
    s = min(max(p_pp * p_mp / total / epsilon_hat, 0.0), 1.0)
    sin2_xi = p_mp / total
    base = math.asin(math.sqrt(s))
    cands = []
    for j in range(0, 2 * m + 1):
        for x in ((j * math.pi - base) / (2 * m), (j * math.pi + base) / (2 * m)):
            if 0.0 <= x < math.pi and abs(math.sin(x) ** 2 - sin2_xi) <= tol:
                if all(abs(x - c) > 1e-12 for c in cands):
                    cands.append(x)
    if not cands:
        raise Inconsistent(
            "no alias of sin^2(2 M xi) agrees with the tan^2(xi) ratio "
            f"(sin^2 xi = {sin2_xi:.6g}, sin^2 2M xi = {s:.6g})"
        )
    return sorted(cands)


def peak_phase(n_half: int, k: int = 0) -> float:
    """Position (2k + 1) pi / (2n) of the k-th transition peak of the phase block."""
    if n_half < 1 or k < 0:
        raise DomainError("need n_half >= 1 and k >= 0")
    return (2 * k + 1) * math.pi / (2 * n_half)


def peak_transition(p: float, gamma: float, n_half: int, m: int, k: int = 0) -> float:
    """First-order peak height 4 M^2 p (1 - 2 gamma cot a) / sin^2 a, a = (2k+1) pi/(2n)."""
    a = peak_phase(n_half, k)
    return 4.0 * m * m * p * (1.0 - 2.0 * gamma / math.tan(a)) / math.sin(a) ** 2


def estimate_phase_gamma_peak(p_n: float, p_hat: float, n_half: int, m: int, k: int = 0) -> ErrorEstimate:
    """
    Phase error gamma of a gate operated near the k-th peak of the
    [(U_{-Omega})^n (U_{Omega})^n]^M sequence, by inverting the first-order
    peak height (``peak_transition``).

    The formula is linear in gamma; its bias grows with the peak height
    4 M^2 p / sin^2 a, so it is only trustworthy well below saturation.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    p_n = _check_prob("P_N", p_n)
    if not p_hat > 0:
        raise DomainError("p_hat must be positive")
    a = peak_phase(n_half, k)
    cot = math.cos(a) / math.sin(a)
    if abs(cot) < 1e-12:
        raise DomainError(f"cot({a:.6g}) = 0: the peak height is insensitive to gamma at first order")
    sa2 = math.sin(a) ** 2
    gamma = (1.0 - p_n * sa2 / (4.0 * m * m * p_hat)) / (2.0 * cot)
    residual = abs(peak_transition(p_hat, gamma, n_half, m, k) - p_n)
    return ErrorEstimate(
        p_hat=min(p_hat, 1.0),
        epsilon_hat=p_hat,
        method=Method.PHASE_GATE_PEAK,
        residual=residual,
        xi_hat=a + gamma,
        gamma_hat=gamma,
        inputs={"p_n": p_n, "p_hat": p_hat, "n_half": n_half, "m": m, "k": k},
    )
