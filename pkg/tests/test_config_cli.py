import csv
import io
import json
import math
import subprocess
import sys

import pytest

from multipass import ConfigError, chebyshev_populations_real_a, classical_populations
from multipass import config as cfgmod
from multipass.cli import cmd_estimate, cmd_propagate, cmd_suggest_n, cmd_sweep, run

PROB_PHASE = """
gate:
  prob_phase: {p: 0.999, xi: 0.0, eta: 0.0}
sequence:
  repeat: {n: 11}
"""


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    lines = open(path).read().splitlines()
    assert lines[0].startswith("# config_hash=")
    return lines[0], list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


# -- config ---------------------------------------------------------------------------


def test_config_round_trip():
    text = """
gate:
  rabi: {omega: 1.0, delta: 0.5, duration: 3.14}
sequence:
  pair: {kind: MinusPlus, m: 10}
sweep: {variable: M, start: 1, stop: 20}
shots: 1000
seed: 7
output: {path: out.csv, format: csv}
estimate: {hint: NearOne}
"""
    cfg = cfgmod.loads(text)
    once = cfg.dumps()
    assert cfgmod.loads(once).dumps() == once
    assert cfgmod.loads(once) == cfg
    assert cfgmod.loads(once).hash() == cfg.hash()


def test_config_hash_changes_with_content():
    a = cfgmod.loads(PROB_PHASE)
    assert a.hash() != a.replace(seed=1).hash()
    assert len(a.hash()) == 16


@pytest.mark.parametrize(
    "text,needle",
    [
        ("gate: {prob_phase: {p: 0.5, xi: 0, eta: 0}}", "sequence"),
        ("gate: {prob_phase: {p: 1.5, xi: 0, eta: 0}}\nsequence: {repeat: {n: 2}}", "gate.prob_phase"),
        ("gate: {prob_phase: {p: 0.5, xi: 0}}\nsequence: {repeat: {n: 2}}", "missing"),
        ("gate: {wobble: {x: 1}}\nsequence: {repeat: {n: 2}}", "unknown kind"),
        ("gate: {resonant: {area: 1}}\nsequence: {repeat: {n: 0}}", "sequence.repeat.n"),
        ("gate: {resonant: {area: 1}}\nsequence: {pair: {kind: Up, m: 2}}", "sequence.pair.kind"),
        ("gate: {resonant: {area: 1}}\nsequence: {repeat: {n: 2}}\nshots: -3", "shots"),
        ("gate: {resonant: {area: 1}}\nsequence: {repeat: {n: 2}}\nsweep: {variable: p, start: 0, stop: 1}", "prob_phase"),
        ("gate: {resonant: {area: 1}}\nsequence: {repeat: {n: 2}}\nbogus: 1", "unknown top-level"),
        ("gate: {resonant: {area: 1}}\nsequence: {repeat: {n: 2}}\noutput: {format: xml}", "output.format"),
        ("gate: [unclosed", "line"),
    ],
)
def test_config_errors(text, needle):
    with pytest.raises(ConfigError, match=needle):
        cfgmod.loads(text)


def test_sweep_values():
    cfg = cfgmod.loads(PROB_PHASE + "sweep: {variable: N, start: 1, stop: 5}\n")
    assert cfg.sweep.values() == [1, 2, 3, 4, 5]
    cfg = cfgmod.loads(PROB_PHASE + "sweep: {variable: p, start: 0, stop: 1, steps: 5}\n")
    assert cfg.sweep.values() == [0.0, 0.25, 0.5, 0.75, 1.0]


# -- propagate ------------------------------------------------------------------------


def test_propagate_examples():
    r = cmd_propagate(cfgmod.loads("gate: {resonant: {area: 3.141592653589793}}\nsequence: {repeat: {n: 2}}"))
    assert r["Q"] == pytest.approx(1.0, abs=1e-15)
    r = cmd_propagate(cfgmod.loads(PROB_PHASE))
    assert r["Q"] == pytest.approx(0.121, abs=121**2 * 1e-6)
    assert r["Q_classical"] == pytest.approx(classical_populations(0.999, 11).q_return)
    r = cmd_propagate(cfgmod.loads("gate: {rabi: {omega: 1.3, delta: 0.4, duration: 2.0}}\nsequence: {repeat: {n: 100}}"))
    assert r["discrepancy"] < 1e-10


def test_propagate_cli_csv_and_json(tmp_path, capsys):
    path = write(tmp_path, PROB_PHASE)
    assert run(["propagate", path, "--out", str(tmp_path / "p.csv")]) == 0
    head, rows = read_csv(tmp_path / "p.csv")
    assert "version=0.1.0" in head
    assert float(rows[0]["Q"]) == pytest.approx(chebyshev_populations_real_a(0.999, 11).q_return, abs=1e-13)
    assert run(["propagate", path, "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n_passes"] == 11 and len(out["propagator_oracle"]) == 2


# -- sweep ------------------------------------------------------------------------------


def test_sweep_p_real_a(tmp_path):
    cfg = cfgmod.loads(PROB_PHASE.replace("n: 11", "n: 2") + "sweep: {variable: p, start: 0, stop: 1, steps: 200}\n")
    header, rows = cmd_sweep(cfg)
    assert header == ["sweep_var", "Q_quantum", "P_quantum", "Q_classical", "P_classical"]
    assert len(rows) == 200
    for p, qq, _, qc, _ in rows:
        assert qq == pytest.approx(math.cos(2 * math.acos(math.sqrt(1 - p))) ** 2, abs=1e-12)
        assert qc == (1 + (1 - 2 * p) ** 2) / 2


def test_sweep_cli_output_dir_and_format(tmp_path, monkeypatch):
    path = write(tmp_path, PROB_PHASE + "sweep: {variable: N, start: 1, stop: 40}\nshots: 1000\nseed: 3\n")
    monkeypatch.setenv("MULTIPASS_OUTPUT_DIR", str(tmp_path / "outdir"))
    assert run(["sweep", path, "--out", "s.csv"]) == 0
    head, rows = read_csv(tmp_path / "outdir" / "s.csv")
    assert list(rows[0]) == ["sweep_var", "Q_quantum", "P_quantum", "Q_classical", "P_classical", "p_hat", "stderr"]
    assert [int(r["sweep_var"]) for r in rows] == list(range(1, 41))
    first = open(tmp_path / "outdir" / "s.csv").read()
    assert run(["sweep", path, "--out", "s2.csv", "--jobs", "2"]) == 0
    assert open(tmp_path / "outdir" / "s2.csv").read() == first


def test_sweep_full_precision(tmp_path):
    path = write(tmp_path, PROB_PHASE + "sweep: {variable: p, start: 0, stop: 1, steps: 7}\n")
    assert run(["sweep", path, "--out", str(tmp_path / "a.csv")]) == 0
    _, rows = read_csv(tmp_path / "a.csv")
    cfg = cfgmod.load(path)
    _, exact = cmd_sweep(cfg)
    for r, e in zip(rows, exact):
        assert float(r["Q_quantum"]) == e[1]


def test_sweep_xi_pair():
    cfg = cfgmod.loads(
        "gate: {prob_phase: {p: 0.001, xi: 0, eta: 0}}\nsequence: {pair: {kind: MinusPlus, m: 10}}\n"
        "sweep: {variable: xi, start: 0, stop: 6.283185307179586, steps: 50}\n"
    )
    _, rows = cmd_sweep(cfg)
    assert max(r[2] for r in rows) > 0.1


def test_sweep_without_section_is_config_error(tmp_path):
    assert run(["sweep", write(tmp_path, PROB_PHASE)]) == 2


# -- estimate ---------------------------------------------------------------------------


def test_estimate_real_a_exact():
    cfg = cfgmod.loads("gate: {prob_phase: {p: 0.9999, xi: 0, eta: 0}}\nsequence: {repeat: {n: 70}}")
    est = cmd_estimate(cfg, "RealA")["estimate"]
    assert est["epsilon_hat"] == pytest.approx(1e-4, abs=1e-10)


def test_estimate_ratio_exact():
    cfg = cfgmod.loads("gate: {prob_phase: {p: 0.3, xi: 0.5, eta: 0}}\nsequence: {pair: {kind: PlusPlus, m: 1}}")
    assert cmd_estimate(cfg, "RatioGeneral")["estimate"]["p_hat"] == pytest.approx(0.3, abs=1e-12)


def test_estimate_ratio_aliasing_exit_code(tmp_path):
    path = write(tmp_path, "gate: {prob_phase: {p: 0.3, xi: 0.9, eta: 0}}\nsequence: {pair: {kind: PlusPlus, m: 3}}")
    assert run(["estimate", path, "--protocol", "RatioGeneral"]) == 3


def test_estimate_phase_gate_sum_shots():
    text = "gate: {prob_phase: {p: 0.001, xi: 0.0, eta: 0.3}}\nsequence: {pair: {kind: PlusMinus, m: 10}}"
    exact = cmd_estimate(cfgmod.loads(text), "PhaseGateSum")["estimate"]["epsilon_hat"]
    out = cmd_estimate(cfgmod.loads(text + "\nshots: 100000\nseed: 1"), "PhaseGateSum", replicas=100)
    boot = out["bootstrap"]
    assert boot["failures"] == 0
    se = boot["stderr"]["epsilon_hat"]
    assert abs(out["estimate"]["epsilon_hat"] - exact) <= 5 * se
    assert out["warnings"] == []


def test_estimate_shot_budget_warning():
    text = "gate: {prob_phase: {p: 1e-6, xi: 0.0, eta: 0.3}}\nsequence: {pair: {kind: PlusMinus, m: 2}}\nshots: 100"
    out = cmd_estimate(cfgmod.loads(text), "PhaseGateSum", replicas=50)
    assert any("ShotBudgetTooSmall" in w for w in out["warnings"])


def test_estimate_regime_exit_code(tmp_path):
    path = write(tmp_path, "gate: {prob_phase: {p: 0.99, xi: 0.5, eta: 0}}\nsequence: {pair: {kind: PlusPlus, m: 10}}")
    assert run(["estimate", path, "--protocol", "SumLargeP"]) == 4


def test_estimate_wrong_sequence_is_config_error(tmp_path):
    path = write(tmp_path, PROB_PHASE)
    assert run(["estimate", path, "--protocol", "SumLargeP"]) == 2
    assert run(["estimate", path, "--protocol", "PhaseGatePeak"]) == 2


def test_estimate_two_point_hint():
    text = PROB_PHASE.replace("0.999", "0.37").replace("n: 11", "n: 7") + "estimate: {hint: TwoPoint, n2: 8}\n"
    assert cmd_estimate(cfgmod.loads(text), "RealA")["estimate"]["p_hat"] == pytest.approx(0.37, abs=1e-9)


def test_estimate_shot_mode_reproducible(tmp_path):
    path = write(tmp_path, PROB_PHASE + "shots: 5000\nseed: 9\n")
    args = ["estimate", path, "--protocol", "RealA", "--bootstrap", "20"]
    assert run(args + ["--out", str(tmp_path / "a.json")]) == 0
    assert run(args + ["--out", str(tmp_path / "b.json")]) == 0
    assert open(tmp_path / "a.json").read() == open(tmp_path / "b.json").read()


# -- suggest-n and misc ---------------------------------------------------------------------


def test_suggest_n(capsys):
    assert cmd_suggest_n(1e-4)["amplification_passes"] == 70
    assert cmd_suggest_n(1e-2)["amplification_passes"] == 7
    assert cmd_suggest_n(1e-3)["half_probability_passes"] == 250
    assert run(["suggest-n", "1e-4"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "70"
    assert run(["suggest-n", "-1"]) == 2


def test_missing_config_file(tmp_path):
    assert run(["propagate", str(tmp_path / "nope.yaml")]) == 2


def test_bad_shots_override(tmp_path):
    assert run(["propagate", write(tmp_path, PROB_PHASE), "--shots", "many"]) == 2


def test_module_entry_point(tmp_path):
    path = write(tmp_path, PROB_PHASE)
    out = subprocess.run([sys.executable, "-m", "multipass", "propagate", path, "--format", "json"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["n_passes"] == 11
