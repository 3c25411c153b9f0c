"""
Gate programs and their evaluation.

A program is a list of gate variants applied left to right in time. The
propagator of the whole sequence accumulates on the left, so the program
[Original, FlipOmega] gives U_{-Omega,Delta} @ U_{Omega,Delta}.

``evaluate`` multiplies every gate literally and is the reference oracle for
all closed forms. ``evaluate_fast`` multiplies one program instance and raises
the block to the M-th power in closed form.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .closed_form import MultiPassResult
from .errors import DomainError, NumericalDrift
from .su2 import IDENTITY, GateVariant, Su2Gate, _mul, power, variant

DRIFT_TOL = 1e-8


class PairKind(enum.Enum):
    """Double-pass pairs; the second gate acts after the original one."""

    PLUS_PLUS = "PlusPlus"
    MINUS_PLUS = "MinusPlus"
    PLUS_MINUS = "PlusMinus"
    MINUS_MINUS = "MinusMinus"

    @property
    def second(self) -> GateVariant:
        return _PAIR_SECOND[self]

    @classmethod
    def parse(cls, tag: str | PairKind) -> PairKind:
        if isinstance(tag, cls):
            return tag
        for k in cls:
            if tag in (k.value, k.name):
                return k
        raise DomainError(f"unknown pair kind {tag!r}")


_PAIR_SECOND = {
    PairKind.PLUS_PLUS: GateVariant.ORIGINAL,
    PairKind.MINUS_PLUS: GateVariant.FLIP_OMEGA,
    PairKind.PLUS_MINUS: GateVariant.FLIP_DELTA,
    PairKind.MINUS_MINUS: GateVariant.FLIP_BOTH,
}


@dataclass(frozen=True)
class GateSequence:
    base: Su2Gate
    program: tuple[GateVariant, ...]
    repeat_whole: int = 1

    def __post_init__(self):
        prog = tuple(GateVariant.parse(v) for v in self.program)
        if not prog:
            raise DomainError("program must not be empty")
        if int(self.repeat_whole) != self.repeat_whole or self.repeat_whole < 1:
            raise DomainError("repeat_whole must be a positive integer")
        object.__setattr__(self, "program", prog)
        object.__setattr__(self, "repeat_whole", int(self.repeat_whole))

    @property
    def total_passes(self) -> int:
        return len(self.program) * self.repeat_whole

    def with_repeat(self, m: int) -> GateSequence:
        return GateSequence(self.base, self.program, m)

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "program": [v.value for v in self.program],
            "repeat": self.repeat_whole,
        }

    @classmethod
    def from_dict(cls, d: dict) -> GateSequence:
        return cls(Su2Gate.from_dict(d["base"]), tuple(d["program"]), d["repeat"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> GateSequence:
        return cls.from_dict(json.loads(s))


def repeat_same(g: Su2Gate, n: int) -> GateSequence:
    return GateSequence(g, (GateVariant.ORIGINAL,), n)


def pair_sequence(g: Su2Gate, kind: PairKind | str, m: int) -> GateSequence:
    kind = PairKind.parse(kind)
    return GateSequence(g, (GateVariant.ORIGINAL, kind.second), m)


def phase_gate_block(g: Su2Gate, n_half: int, m: int) -> GateSequence:
    """[(U_{-Omega})^n (U_{Omega})^n]^M: n originals, then n Omega-flipped, M times."""
    if n_half < 1:
        raise DomainError("n_half must be >= 1")
    prog = (GateVariant.ORIGINAL,) * n_half + (GateVariant.FLIP_OMEGA,) * n_half
    return GateSequence(g, prog, m)


def _program_gates(seq: GateSequence) -> list[tuple[complex, complex]]:
    out = []
    for v in seq.program:
        g = variant(seq.base, v)
        out.append((g.a, g.b))
    return out


def _check_drift(a: complex, b: complex, done: int):
    defect = abs(a) ** 2 + abs(b) ** 2 - 1.0
    if abs(defect) > DRIFT_TOL:
        raise NumericalDrift(f"norm defect {defect:.3e} after {done} passes")


def trajectory(seq: GateSequence) -> Iterator[tuple[int, Su2Gate]]:
    """
    Yield (m, propagator) after each of the M program repetitions.

    Every propagator is the literal left-to-right product of all gates
    applied so far; nothing is renormalized.
    """
    gates = _program_gates(seq)
    a, b = 1.0 + 0j, 0j
    for m in range(1, seq.repeat_whole + 1):
        for ga, gb in gates:
            a, b = _mul(ga, gb, a, b)
        _check_drift(a, b, m * len(gates))
        yield m, Su2Gate._unchecked(a, b)


def trajectory_many(
    bases: Sequence[Su2Gate], program: Sequence[GateVariant | str], repeat: int, checkpoints=None
) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """
    Literal products for many base gates at once, vectorized over gates.

    Returns {m: (a, b)} arrays of Cayley-Klein pairs after m program
    repetitions, for every m in ``checkpoints`` (default: all m).
    """
    program = [GateVariant.parse(v) for v in program]
    if not program or repeat < 1:
        raise DomainError("need a non-empty program and repeat >= 1")
    wanted = set(range(1, repeat + 1)) if checkpoints is None else {int(c) for c in checkpoints}
    ga = [np.array([variant(g, v).a for g in bases]) for v in program]
    gb = [np.array([variant(g, v).b for g in bases]) for v in program]
    a = np.ones(len(bases), dtype=np.complex128)
    b = np.zeros(len(bases), dtype=np.complex128)
    out = {}
    for m in range(1, repeat + 1):
        for pa, pb in zip(ga, gb):
            a, b = pa * a - pb.conj() * b, pb * a + pa.conj() * b
        if m in wanted:
            defect = np.abs(np.abs(a) ** 2 + np.abs(b) ** 2 - 1.0).max()
            if defect > DRIFT_TOL:
                raise NumericalDrift(f"norm defect {defect:.3e} after {m * len(program)} passes")
            out[m] = (a.copy(), b.copy())
    return out


def evaluate(seq: GateSequence) -> MultiPassResult:
    """Brute-force oracle: multiply every gate of the sequence in order."""
    prop = IDENTITY
    for _, prop in trajectory(seq):
        pass
    return MultiPassResult.from_gate(seq.total_passes, prop)


def block_propagator(seq: GateSequence) -> Su2Gate:
    """Propagator of a single program instance."""
    a, b = 1.0 + 0j, 0j
    for ga, gb in _program_gates(seq):
        a, b = _mul(ga, gb, a, b)
    return Su2Gate._unchecked(a, b)


def evaluate_fast(seq: GateSequence) -> MultiPassResult:
    """One program instance by multiplication, then the closed-form M-th power."""
    block = block_propagator(seq)
    return MultiPassResult.from_gate(seq.total_passes, power(block, seq.repeat_whole))


def transition_probabilities(seqs: Sequence[GateSequence], fast: bool = True) -> list[float]:
    ev = evaluate_fast if fast else evaluate
    return [ev(s).p_transfer for s in seqs]
