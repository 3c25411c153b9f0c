"""
Command-line harness: ``multipass {propagate,sweep,estimate,suggest-n}``.

Exit codes: 0 success, 2 config error, 3 estimator error, 4 regime violation.
Relative output paths are resolved against $MULTIPASS_OUTPUT_DIR when set.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from . import __version__
from . import config as cfgmod
from .closed_form import amplification_passes, classical_populations, half_probability_passes
from .config import ExperimentConfig
from .errors import ConfigError, DomainError, EstimatorError, MultipassError, RegimeViolation
from .estimators import (
    ErrorEstimate,
    Hint,
    Method,
    TwoPoint,
    estimate_phase_gamma_peak,
    estimate_phase_gate_sum,
    estimate_phase_xi,
    estimate_ratio_general,
    estimate_sum_large_p,
    invert_real_a,
)
from .sequences import GateSequence, PairKind, evaluate, evaluate_fast, pair_sequence, repeat_same
from .shots import derive_seed, estimate_probability, sample

log = logging.getLogger("multipass")

EXIT_OK, EXIT_CONFIG, EXIT_ESTIMATOR, EXIT_REGIME = 0, 2, 3, 4
OUTPUT_DIR_ENV = "MULTIPASS_OUTPUT_DIR"
DEFAULT_BOOTSTRAP = 200


def fmt(x: float) -> str:
    return "%.17g" % x


# -- output -----------------------------------------------------------------------


def resolve_output(path: Optional[str]) -> Optional[str]:
    if path is None or path == "-":
        return None
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def emit(text: str, path: Optional[str]):
    target = resolve_output(path)
    if target is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(target)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(target, "w") as fh:
        fh.write(text)
    log.info("wrote %s", target)


def csv_text(cfg: ExperimentConfig, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={cfg.hash()} version={__version__}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


# -- measurement --------------------------------------------------------------------


def measure(cfg: ExperimentConfig, seqs: list[GateSequence]) -> list[dict]:
    """Exact transition probability of each sequence, or a shot estimate of it."""
    out = []
    for j, seq in enumerate(seqs):
        res = evaluate_fast(seq)
        item = {"sequence": seq.to_dict(), "exact": res.p_transfer}
        if cfg.exact:
            item.update(probability=res.p_transfer, stderr=0.0)
        else:
            rec = sample(res, cfg.shots, derive_seed(cfg.seed, j), sequence_id=f"seq{j}")
            p, se = estimate_probability(rec)
            item.update(probability=p, stderr=se, record=rec.to_row())
        out.append(item)
    return out


# -- propagate ------------------------------------------------------------------------


def cmd_propagate(cfg: ExperimentConfig) -> dict:
    if cfg.sweep is not None:
        raise ConfigError("propagate does not take a sweep; use `multipass sweep`")
    seq = cfg.sequence()
    slow, fast = evaluate(seq), evaluate_fast(seq)
    ms, mf = slow.propagator.matrix, fast.propagator.matrix
    disc = float(np.abs(ms - mf).max())
    classical = classical_populations(cfg.classical_p(seq), seq.total_passes)

    def entries(m):
        return [[[float(z.real), float(z.imag)] for z in row] for row in m]

    return {
        "config_hash": cfg.hash(),
        "version": __version__,
        "n_passes": seq.total_passes,
        "Q": slow.q_return,
        "P": slow.p_transfer,
        "Q_fast": fast.q_return,
        "P_fast": fast.p_transfer,
        "Q_classical": classical.q_return,
        "P_classical": classical.p_transfer,
        "propagator_oracle": entries(ms),
        "propagator_fast": entries(mf),
        "discrepancy": disc,
    }


# -- sweep ------------------------------------------------------------------------------


def _sweep_point(args):
    cfg, idx, value = args
    seq = cfg.point(value)
    res = evaluate_fast(seq)
    cl = classical_populations(cfg.classical_p(seq, value), seq.total_passes)
    row = [value, res.q_return, res.p_transfer, cl.q_return, cl.p_transfer]
    if not cfg.exact:
        rec = sample(res, cfg.shots, derive_seed(cfg.seed, idx), sequence_id=f"pt{idx}")
        row.extend(estimate_probability(rec))
    return row


def cmd_sweep(cfg: ExperimentConfig, jobs: int = 1) -> tuple[list[str], list[list]]:
    if cfg.sweep is None:
        raise ConfigError("sweep: missing 'sweep' section")
    values = cfg.sweep.values()
    tasks = [(cfg, i, v) for i, v in enumerate(values)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_sweep_point(t) for t in tasks]
    header = ["sweep_var", "Q_quantum", "P_quantum", "Q_classical", "P_classical"]
    if not cfg.exact:
        header += ["p_hat", "stderr"]
    return header, rows


# -- estimate ---------------------------------------------------------------------------


def _pair_m(cfg: ExperimentConfig) -> int:
    m = cfg.estimate.get("m", cfg.sequence_params.get("m"))
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise ConfigError("estimate: protocol needs a pair count; set sequence.pair.m or estimate.m")
    return m


def _hint(cfg: ExperimentConfig):
    h = cfg.estimate.get("hint", "NearOne")
    if h == "TwoPoint":
        n2 = cfg.estimate.get("n2")
        if isinstance(n2, bool) or not isinstance(n2, int) or n2 < 1:
            raise ConfigError("estimate.n2: TwoPoint hint needs a positive integer second pass count")
        return "TwoPoint", n2
    try:
        return Hint(h), None
    except ValueError:
        raise ConfigError(f"estimate.hint: expected NearOne, NearZero or TwoPoint, got {h!r}") from None


def protocol_sequences(cfg: ExperimentConfig, method: Method) -> list[GateSequence]:
    g = cfg.gate()
    if method is Method.REAL_A:
        if cfg.sequence_kind != "repeat":
            raise ConfigError("RealA protocol needs sequence.repeat")
        n = cfg.sequence_params["n"]
        seqs = [repeat_same(g, n)]
        hint, n2 = _hint(cfg)
        if hint == "TwoPoint":
            seqs.append(repeat_same(g, n2))
        return seqs
    if method is Method.PHASE_GATE_PEAK:
        if cfg.sequence_kind != "phase_block":
            raise ConfigError("PhaseGatePeak protocol needs sequence.phase_block")
        ms = cfg.estimate.get("m_sum", cfg.sequence_params["m"])
        return [cfg.sequence(g), pair_sequence(g, PairKind.PLUS_MINUS, ms), pair_sequence(g, PairKind.MINUS_MINUS, ms)]
    m = _pair_m(cfg)
    if method is Method.SUM_LARGE_P:
        return [pair_sequence(g, PairKind.PLUS_PLUS, m), pair_sequence(g, PairKind.MINUS_PLUS, m)]
    if method is Method.RATIO_GENERAL:
        return [
            pair_sequence(g, PairKind.PLUS_PLUS, m),
            pair_sequence(g, PairKind.PLUS_PLUS, 2 * m),
            pair_sequence(g, PairKind.MINUS_PLUS, m),
            pair_sequence(g, PairKind.MINUS_PLUS, 2 * m),
        ]
    # PhaseGateSum; the ++ and -+ pairs feed the optional xi recovery
    return [
        pair_sequence(g, PairKind.PLUS_MINUS, m),
        pair_sequence(g, PairKind.MINUS_MINUS, m),
        pair_sequence(g, PairKind.PLUS_PLUS, m),
        pair_sequence(g, PairKind.MINUS_PLUS, m),
    ]


def run_protocol(cfg: ExperimentConfig, method: Method, probs: list[float], stderrs: list[float]):
    """Feed measured probabilities to the estimator. Returns (estimate, extras)."""
    extras: dict = {}
    if method is Method.REAL_A:
        n = cfg.sequence_params["n"]
        hint, n2 = _hint(cfg)
        if hint == "TwoPoint":
            tol = cfg.estimate.get("tol", 1e-9 if cfg.exact else 5 * max(stderrs[1], 1e-12))
            hint = TwoPoint(probs[1], n2)
            return invert_real_a(probs[0], n, hint, observable="P", tol=tol), extras
        return invert_real_a(probs[0], n, hint, observable="P"), extras
    if method is Method.SUM_LARGE_P:
        return estimate_sum_large_p(probs[0], probs[1], _pair_m(cfg)), extras
    if method is Method.RATIO_GENERAL:
        if cfg.exact:
            tol = cfg.estimate.get("alias_tol", 1e-6)
        else:
            rel = max(stderrs[0] / max(probs[0], 1e-300), stderrs[2] / max(probs[2], 1e-300))
            tol = cfg.estimate.get("alias_tol", max(1e-6, 5 * rel))
        return estimate_ratio_general(probs[0], probs[1], probs[2], probs[3], _pair_m(cfg), alias_tol=tol), extras
    if method is Method.PHASE_GATE_SUM:
        m = _pair_m(cfg)
        est = estimate_phase_gate_sum(probs[0], probs[1], m)
        if est.epsilon_hat > 0:
            try:
                xi_tol = cfg.estimate.get("xi_tol", 1e-3)
                extras["xi_candidates"] = estimate_phase_xi(probs[2], probs[3], est.epsilon_hat, m, tol=xi_tol)
            except EstimatorError as e:
                extras["xi_candidates"] = None
                extras["xi_error"] = f"{type(e).__name__}: {e}"
        return est, extras
    # PhaseGatePeak
    ms = cfg.estimate.get("m_sum", cfg.sequence_params["m"])
    sum_est = estimate_phase_gate_sum(probs[1], probs[2], ms)
    extras["p_hat_from_sum"] = sum_est.p_hat
    if sum_est.p_hat <= 0:
        raise DomainError("sum protocol found no leakage; gamma cannot be recovered from the peak height")
    k = cfg.estimate.get("k", 0)
    est = estimate_phase_gamma_peak(probs[0], sum_est.p_hat, cfg.sequence_params["n"], cfg.sequence_params["m"], k)
    return est, extras


_BOOT_FIELDS = ("p_hat", "epsilon_hat", "xi_hat", "gamma_hat", "eta_hat")


def bootstrap(cfg: ExperimentConfig, method: Method, probs: list[float], replicas: int) -> dict:
    """
    Parametric bootstrap: redraw every count from Binomial(shots, measured
    frequency) with seeds derive_seed(derive_seed(seed, 10**6 + r), j).
    """
    samples: dict = {f: [] for f in _BOOT_FIELDS}
    failures = 0
    for r in range(replicas):
        rseed = derive_seed(cfg.seed, 10**6 + r)
        rp, rs = [], []
        for j, p in enumerate(probs):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(derive_seed(rseed, j))))
            k = int(rng.binomial(cfg.shots, min(max(p, 0.0), 1.0)))
            f = k / cfg.shots
            rp.append(f)
            rs.append(math.sqrt(f * (1 - f) / cfg.shots) if 0 < k < cfg.shots else 3.0 / cfg.shots)
        try:
            est, _ = run_protocol(cfg, method, rp, rs)
        except (EstimatorError, DomainError):
            failures += 1
            continue
        for f in _BOOT_FIELDS:
            v = getattr(est, f)
            if v is not None:
                samples[f].append(v)
    stderr = {f: (float(np.std(v, ddof=1)) if len(v) > 1 else None) for f, v in samples.items()}
    return {"replicas": replicas, "failures": failures, "stderr": stderr}


def cmd_estimate(cfg: ExperimentConfig, protocol: str, replicas: int = DEFAULT_BOOTSTRAP) -> dict:
    method = Method.parse(protocol)
    seqs = protocol_sequences(cfg, method)
    measured = measure(cfg, seqs)
    probs = [m["probability"] for m in measured]
    stderrs = [m["stderr"] for m in measured]
    est, extras = run_protocol(cfg, method, probs, stderrs)
    payload = {
        "config_hash": cfg.hash(),
        "version": __version__,
        "protocol": method.value,
        "shots": cfg.shots,
        "seed": cfg.seed,
        "estimate": est.to_dict(),
        "measured": measured,
        "warnings": [],
    }
    payload.update(extras)
    if not cfg.exact and replicas > 0:
        boot = bootstrap(cfg, method, probs, replicas)
        payload["bootstrap"] = boot
        target = "gamma_hat" if method is Method.PHASE_GATE_PEAK else "epsilon_hat"
        se, val = boot["stderr"].get(target), getattr(est, target)
        if se is not None and val is not None and se >= abs(val):
            msg = f"ShotBudgetTooSmall: bootstrap stderr {se:.3g} of {target} is not below the estimate {val:.3g}"
            payload["warnings"].append(msg)
            log.warning(msg)
    return payload


def cmd_suggest_n(epsilon: float) -> dict:
    return {
        "epsilon": epsilon,
        "amplification_passes": amplification_passes(epsilon),
        "half_probability_passes": half_probability_passes(epsilon) if epsilon < 0.5 else None,
    }


# -- argument handling ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="multipass", description=__doc__.strip().splitlines()[0])
    ap.add_argument("--version", action="version", version=f"multipass {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="YAML/JSON experiment config")
        p.add_argument("--shots", help="positive integer or 'exact'")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path ('-' for stdout)")
        p.add_argument("--format", choices=cfgmod.FORMATS)

    p = sub.add_parser("propagate", help="evaluate one sequence with the oracle and the fast path")
    common(p)
    p = sub.add_parser("sweep", help="tabulate quantum and classical populations over a sweep")
    common(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p = sub.add_parser("estimate", help="recover single-pass errors with a protocol")
    common(p)
    p.add_argument("--protocol", required=True, choices=[m.value for m in Method])
    p.add_argument("--bootstrap", type=int, default=DEFAULT_BOOTSTRAP, help="replicas in shot mode")
    p = sub.add_parser("suggest-n", help="pass count that amplifies an error guess to O(1)")
    p.add_argument("epsilon", type=float)
    return ap


def apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    kw = {}
    if args.shots is not None:
        if args.shots == "exact":
            kw["shots"] = "exact"
        else:
            try:
                n = int(args.shots)
            except ValueError:
                raise ConfigError(f"--shots: expected a positive integer or 'exact', got {args.shots!r}") from None
            if n < 1:
                raise ConfigError("--shots must be >= 1")
            kw["shots"] = n
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        kw["seed"] = args.seed
    if args.out is not None:
        kw["output_path"] = args.out
    if args.format is not None:
        kw["output_format"] = args.format
    return cfg.replace(**kw) if kw else cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    stage = "config"
    try:
        if args.command == "suggest-n":
            r = cmd_suggest_n(args.epsilon)
            print(r["amplification_passes"])
            if r["half_probability_passes"] is not None:
                print(f"half-probability branches (p = 1/2 - eps): N ~ {r['half_probability_passes']}")
            return EXIT_OK
        cfg = apply_overrides(cfgmod.load(args.config), args)
        if args.command == "propagate":
            cfg.sequence()
            stage = "run"
            r = cmd_propagate(cfg)
            if cfg.output_format == "csv":
                cols = ["n_passes", "Q", "P", "Q_fast", "P_fast", "Q_classical", "P_classical", "discrepancy"]
                emit(csv_text(cfg, cols, [[r[c] for c in cols]]), cfg.output_path)
            else:
                emit(json_text(r), cfg.output_path)
        elif args.command == "sweep":
            stage = "run"
            header, rows = cmd_sweep(cfg, args.jobs)
            if cfg.output_format == "csv":
                emit(csv_text(cfg, header, rows), cfg.output_path)
            else:
                payload = {"config_hash": cfg.hash(), "version": __version__, "columns": header, "rows": rows}
                emit(json_text(payload), cfg.output_path)
        else:
            protocol_sequences(cfg, Method.parse(args.protocol))
            stage = "estimate"
            r = cmd_estimate(cfg, args.protocol, args.bootstrap)
            emit(json_text(r), cfg.output_path)
        return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeViolation as e:
        print(f"regime violation: {e}", file=sys.stderr)
        return EXIT_REGIME
    except (EstimatorError, DomainError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG if stage == "config" else EXIT_ESTIMATOR
    except MultipassError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ESTIMATOR


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
