"""
Finite-shot measurement simulation.

Counts are drawn with numpy's PCG64 bit generator, seeded through
``numpy.random.SeedSequence``. Independent tasks derive their seeds with
``derive_seed(seed, index)``, which hashes (seed, index) through the same
SeedSequence entropy pool, so a sweep is reproducible point by point
regardless of evaluation order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from .closed_form import MultiPassResult
from .errors import DomainError

RNG_ALGORITHM = "numpy.PCG64/SeedSequence"
CSV_FIELDS = ("sequence_id", "shots", "count1", "count2", "seed")


@dataclass(frozen=True)
class MeasurementRecord:
    sequence_id: str
    shots: int
    count_state1: int
    count_state2: int
    seed: int
    rng: str = RNG_ALGORITHM

    def __post_init__(self):
        if self.shots < 1:
            raise DomainError("shots must be >= 1")
        if self.count_state1 < 0 or self.count_state2 < 0:
            raise DomainError("counts must be non-negative")
        if self.count_state1 + self.count_state2 != self.shots:
            raise DomainError("counts do not add up to shots")

    @property
    def frequency(self) -> float:
        return self.count_state2 / self.shots

    def to_dict(self) -> dict:
        return asdict(self)

    def to_row(self) -> dict:
        return {
            "sequence_id": self.sequence_id,
            "shots": self.shots,
            "count1": self.count_state1,
            "count2": self.count_state2,
            "seed": self.seed,
        }


def _rng(seed: int) -> np.random.Generator:
    if seed < 0:
        raise DomainError("seed must be a non-negative integer")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def derive_seed(seed: int, index: int) -> int:
    """Per-task 64-bit seed from a base seed and a task index."""
    ss = np.random.SeedSequence([seed & (2**64 - 1), index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample(result: MultiPassResult, shots: int, seed: int, sequence_id: str = "") -> MeasurementRecord:
    """Draw count_state2 ~ Binomial(shots, P_N)."""
    if shots < 1:
        raise DomainError("shots must be >= 1")
    p = min(max(result.p_transfer, 0.0), 1.0)
    k = int(_rng(seed).binomial(shots, p))
    return MeasurementRecord(sequence_id, shots, shots - k, k, seed)


def estimate_probability(rec: MeasurementRecord) -> tuple[float, float]:
    """Frequency of state 2 and its binomial standard error.

    At a frequency of exactly 0 or 1 the rule-of-three bound 3/shots is
    reported instead of the (zero) plug-in value.
    """
    p = rec.frequency
    if rec.count_state2 in (0, rec.shots):
        return p, 3.0 / rec.shots
    return p, math.sqrt(p * (1.0 - p) / rec.shots)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.to_row())
    return buf.getvalue()


def records_from_csv(text: str) -> list[MeasurementRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        shots, c1, c2 = int(row["shots"]), int(row["count1"]), int(row["count2"])
        out.append(MeasurementRecord(row["sequence_id"], shots, c1, c2, int(row["seed"])))
    return out
