"""Multi-pass error amplification for single-qubit gates."""

from .closed_form import (
    AsymptoticBranch,
    Branch,
    MultiPassResult,
    amplification_passes,
    asymptotic_populations,
    chebyshev_populations_real_a,
    classical_populations,
    half_probability_passes,
    imaginary_b_populations,
    quantum_populations,
)
from .errors import *  # noqa: F401,F403
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
from .sequences import (
    GateSequence,
    PairKind,
    evaluate,
    evaluate_fast,
    pair_sequence,
    phase_gate_block,
    repeat_same,
)
from .shots import MeasurementRecord, estimate_probability, sample
from .su2 import (
    IDENTITY,
    GateVariant,
    Su2Gate,
    compose,
    from_probability_and_phases,
    make_gate,
    power,
    rabi_gate,
    resonant_gate,
    theta_of,
    variant,
)

__version__ = "0.1.0"
