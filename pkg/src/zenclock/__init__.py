"""Multi-party quantum clock synchronisation with Dicke (Zen) states."""

__version__ = "0.1.0"

from .analytic import (
    Amplitude,
    DensityMatrix,
    a0_opt,
    amplitude,
    bob_conditional_density,
    k_opt,
    prob_plus,
    rho_ab_computational,
    rho_ab_measurement,
)
from .errors import CapacityError, ConfigError
from .protocol import (
    ProtocolConfig,
    TallyTable,
    audit_channel,
    estimate_skew,
    run_protocol,
    run_round,
)
from .states import StateVector, dicke_state, evolve, measure_qubit, partial_trace_pair

__all__ = [
    "Amplitude", "CapacityError", "ConfigError", "DensityMatrix", "ProtocolConfig", "StateVector",
    "TallyTable", "a0_opt", "amplitude", "audit_channel", "bob_conditional_density", "dicke_state",
    "estimate_skew", "evolve", "k_opt", "measure_qubit", "partial_trace_pair", "prob_plus",
    "rho_ab_computational", "rho_ab_measurement", "run_protocol", "run_round",
]
