"""Experiment configuration for the command-line tool.

A config is a YAML (or JSON) mapping::

    gate:
      prob_phase: {p: 0.999, xi: 0.0, eta: 0.0}
    sequence:
      repeat: {n: 11}
    sweep:                      # optional
      variable: p
      start: 0.0
      stop: 1.0
      steps: 200
    shots: exact                # or a positive integer
    seed: 0
    output: {path: out.csv, format: csv}
    estimate:                   # optional, read by `multipass estimate`
      hint: NearOne
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Union

import numpy as np
import yaml

from .errors import ConfigError, DomainError
from .sequences import GateSequence, PairKind, pair_sequence, phase_gate_block, repeat_same
from .su2 import Su2Gate, from_probability_and_phases, make_gate, rabi_gate, resonant_gate

GATE_FIELDS = {
    "cayley_klein": ("re_a", "im_a", "re_b", "im_b"),
    "prob_phase": ("p", "xi", "eta"),
    "resonant": ("area",),
    "rabi": ("omega", "delta", "duration"),
}
SEQUENCE_FIELDS = {
    "repeat": ("n",),
    "pair": ("kind", "m"),
    "phase_block": ("n", "m"),
}
SWEEP_VARIABLES = ("p", "N", "M", "xi")
FORMATS = ("csv", "json")


def _one_of(section: str, raw: Any, table: dict) -> tuple[str, dict]:
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ConfigError(f"{section}: expected exactly one of {sorted(table)}")
    (kind, params), = raw.items()
    if kind not in table:
        raise ConfigError(f"{section}: unknown kind {kind!r}; expected one of {sorted(table)}")
    if not isinstance(params, dict):
        raise ConfigError(f"{section}.{kind}: expected a mapping of parameters")
    missing = [f for f in table[kind] if f not in params]
    extra = [f for f in params if f not in table[kind]]
    if missing:
        raise ConfigError(f"{section}.{kind}: missing field(s) {missing}")
    if extra:
        raise ConfigError(f"{section}.{kind}: unknown field(s) {extra}")
    out = {}
    for f in table[kind]:
        v = params[f]
        if f == "kind":
            try:
                out[f] = PairKind.parse(v).value
            except DomainError as e:
                raise ConfigError(f"{section}.{kind}.kind: {e}") from None
        elif f in ("n", "m"):
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{section}.{kind}.{f}: expected a positive integer, got {v!r}")
            out[f] = v
        else:
            out[f] = _number(f"{section}.{kind}.{f}", v)
    return kind, out


def _number(where: str, v: Any) -> float:
    # YAML 1.1 loads exponent forms without a dot ("1e-6") as strings
    if isinstance(v, str):
        try:
            v = float(v)
        except ValueError:
            pass
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}: expected a finite number, got {v!r}")
    return float(v)


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    steps: Optional[int] = None

    def values(self) -> list:
        if self.variable in ("N", "M"):
            lo, hi = int(round(self.start)), int(round(self.stop))
            if lo < 1 or hi < lo:
                raise ConfigError(f"sweep: integer range [{lo}, {hi}] must satisfy 1 <= start <= stop")
            if self.steps is None:
                return list(range(lo, hi + 1))
            raw = np.rint(np.linspace(lo, hi, self.steps)).astype(int)
            return sorted({int(x) for x in raw})
        steps = 101 if self.steps is None else self.steps
        return [float(x) for x in np.linspace(self.start, self.stop, steps)]

    def to_dict(self) -> dict:
        d = {"variable": self.variable, "start": self.start, "stop": self.stop}
        if self.steps is not None:
            d["steps"] = self.steps
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    gate_kind: str
    gate_params: dict
    sequence_kind: str
    sequence_params: dict
    sweep: Optional[SweepSpec] = None
    shots: Union[int, str] = "exact"
    seed: int = 0
    output_path: Optional[str] = None
    output_format: str = "csv"
    estimate: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.shots == "exact"

    # -- building blocks ------------------------------------------------------

    def gate(self, **override) -> Su2Gate:
        prm = {**self.gate_params, **override}
        k = self.gate_kind
        try:
            if k == "cayley_klein":
                return make_gate(complex(prm["re_a"], prm["im_a"]), complex(prm["re_b"], prm["im_b"]))
            if k == "prob_phase":
                return from_probability_and_phases(prm["p"], prm["xi"], prm["eta"])
            if k == "resonant":
                return resonant_gate(prm["area"])
            return rabi_gate(prm["omega"], prm["delta"], prm["duration"])
        except DomainError as e:
            raise ConfigError(f"gate.{k}: {e}") from None

    def sequence(self, gate: Optional[Su2Gate] = None, **override) -> GateSequence:
        g = self.gate() if gate is None else gate
        prm = {**self.sequence_params, **override}
        k = self.sequence_kind
        if k == "repeat":
            return repeat_same(g, prm["n"])
        if k == "pair":
            return pair_sequence(g, prm["kind"], prm["m"])
        return phase_gate_block(g, prm["n"], prm["m"])

    def classical_p(self, seq: GateSequence, value=None) -> float:
        """Single-pass p for the classical model, exact when it is a config input."""
        if self.sweep is not None and self.sweep.variable == "p" and value is not None:
            return float(value)
        if self.gate_kind == "prob_phase":
            return self.gate_params["p"]
        return seq.base.p

    def point(self, value) -> GateSequence:
        """Sequence at one sweep value."""
        v = self.sweep.variable
        if v in ("p", "xi"):
            return self.sequence(self.gate(**{v: float(value)}))
        if v == "N":
            return self.sequence(n=int(value))
        return self.sequence(m=int(value))

    # -- (de)serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        d: dict = {
            "gate": {self.gate_kind: dict(self.gate_params)},
            "sequence": {self.sequence_kind: dict(self.sequence_params)},
        }
        if self.sweep is not None:
            d["sweep"] = self.sweep.to_dict()
        d["shots"] = self.shots
        d["seed"] = self.seed
        out = {"format": self.output_format}
        if self.output_path is not None:
            out["path"] = self.output_path
        d["output"] = out
        if self.estimate:
            d["estimate"] = dict(self.estimate)
        return d

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def hash(self) -> str:
        """Identifies the experiment; where the output goes is not part of it."""
        d = self.to_dict()
        d.pop("output")
        canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def replace(self, **kw) -> ExperimentConfig:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return ExperimentConfig(**d)


def from_dict(raw: Any) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    known = {"gate", "sequence", "sweep", "shots", "seed", "output", "estimate"}
    extra = sorted(set(raw) - known)
    if extra:
        raise ConfigError(f"unknown top-level key(s) {extra}")
    if "gate" not in raw or "sequence" not in raw:
        raise ConfigError("config needs both 'gate' and 'sequence'")
    gk, gp = _one_of("gate", raw["gate"], GATE_FIELDS)
    sk, sp = _one_of("sequence", raw["sequence"], SEQUENCE_FIELDS)

    sweep = None
    if raw.get("sweep") is not None:
        s = raw["sweep"]
        if not isinstance(s, dict):
            raise ConfigError("sweep: expected a mapping")
        var = s.get("variable")
        if var not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep.variable: expected one of {SWEEP_VARIABLES}, got {var!r}")
        s = dict(s)
        for f in ("start", "stop"):
            s[f] = _number(f"sweep.{f}", s.get(f))
        steps = s.get("steps")
        if steps is not None and (isinstance(steps, bool) or not isinstance(steps, int) or steps < 1):
            raise ConfigError("sweep.steps: expected a positive integer")
        extra = sorted(set(s) - {"variable", "start", "stop", "steps"})
        if extra:
            raise ConfigError(f"sweep: unknown field(s) {extra}")
        if var in ("p", "xi") and gk != "prob_phase":
            raise ConfigError(f"sweep.variable={var} needs gate.prob_phase, got gate.{gk}")
        if var == "N" and sk != "repeat":
            raise ConfigError(f"sweep.variable=N needs sequence.repeat, got sequence.{sk}")
        if var == "M" and sk not in ("pair", "phase_block"):
            raise ConfigError(f"sweep.variable=M needs sequence.pair or sequence.phase_block, got sequence.{sk}")
        if var == "p" and not (0.0 <= s["start"] <= 1.0 and 0.0 <= s["stop"] <= 1.0):
            raise ConfigError("sweep: p range must lie in [0, 1]")
        start, stop = s["start"], s["stop"]
        if var in ("N", "M"):
            start, stop = int(round(start)), int(round(stop))
        sweep = SweepSpec(var, start, stop, steps)

    shots = raw.get("shots", "exact")
    if shots != "exact" and (isinstance(shots, bool) or not isinstance(shots, int) or shots < 1):
        raise ConfigError(f"shots: expected a positive integer or 'exact', got {shots!r}")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed: expected a non-negative integer, got {seed!r}")
    out = raw.get("output") or {}
    if not isinstance(out, dict):
        raise ConfigError("output: expected a mapping")
    fmt = out.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"output.format: expected one of {FORMATS}, got {fmt!r}")
    est = raw.get("estimate") or {}
    if not isinstance(est, dict):
        raise ConfigError("estimate: expected a mapping")
    cfg = ExperimentConfig(gk, gp, sk, sp, sweep, shots, seed, out.get("path"), fmt, dict(est))
    cfg.gate()  # surface domain errors (p outside [0, 1], non-unitary pair) at parse time
    return cfg


def loads(text: str) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"cannot parse config{where}: {getattr(e, 'problem', e)}") from None
    return from_dict(raw)


def load(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return loads(text)
