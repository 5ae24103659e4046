"""Check the closed forms in :mod:`zenclock.analytic` against brute-force
statevector computations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import analytic, states

TOL = 1e-12
PHASE_GRID = (0.0, math.pi / 7, math.pi / 3, math.pi / 2, math.pi, 3 * math.pi / 2)
ALL_PAIRS_MAX_N = 10


def pipeline_prob_plus(
    n: int, k: int, omega: float, delta_t: float, bob: int = 1, alice_outcome: int = 0
) -> float:
    """P(Bob reads + | Alice read ``alice_outcome``) by explicit state manipulation.

    prepare -> rotate+project Alice at t=0 -> Bob's qubit runs for delta_t ->
    rotate Bob -> Born probability of 0 on Bob.
    """
    psi = states.rotate_to_measurement_basis(states.dicke_state(n, k), 0)
    _, psi = states.project_qubit(psi, 0, alice_outcome)
    psi = states.evolve(psi, delta_t, omega, qubits=(bob,))
    psi = states.rotate_to_measurement_basis(psi, bob)
    return states.qubit_probabilities(psi, bob)[0]


@dataclass(frozen=True)
class CaseResult:
    n: int
    k: int
    rho_dev: float
    prob_dev: float
    worst_cell: str


@dataclass
class VerifyReport:
    max_n: int
    cases: list[CaseResult] = field(default_factory=list)
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None


def _pairs(n: int):
    if n <= ALL_PAIRS_MAX_N:
        return list(combinations(range(n), 2))
    return [(0, j) for j in range(1, n)]


def run_verification(max_n: int, omega: float = 1.0) -> VerifyReport:
    """Pair density matrix and conditional probability checks for 2 <= n <= max_n, 0 <= k <= n.

    Stops at the first case whose deviation exceeds :data:`TOL`.
    """
    if max_n < 2:
        raise ValueError("max_n must be >= 2")
    if max_n > states.MAX_QUBITS:
        raise states.CapacityError(f"max_n={max_n} exceeds the statevector cap of {states.MAX_QUBITS}")
    report = VerifyReport(max_n)
    for n in range(2, max_n + 1):
        for k in range(0, n + 1):
            psi = states.dicke_state(n, k)
            expected = analytic.rho_ab_computational(n, k).entries
            rho_dev, worst = 0.0, f"n={n} k={k}"
            for a, b in _pairs(n):
                d = float(np.max(np.abs(states.partial_trace_pair(psi, a, b).entries - expected)))
                if d > rho_dev:
                    rho_dev, worst = d, f"n={n} k={k} pair=({a},{b})"
            if rho_dev > TOL:
                report.cases.append(CaseResult(n, k, rho_dev, math.nan, worst))
                report.failure = f"pair density matrix mismatch at {worst}: deviation {rho_dev:.3g}"
                return report
            prob_dev, worst_p = 0.0, ""
            for bob in sorted({1, n - 1}):
                for phase in PHASE_GRID:
                    dt = phase / omega
                    d = abs(pipeline_prob_plus(n, k, omega, dt, bob) - analytic.prob_plus(n, k, omega, dt))
                    if d > prob_dev or not worst_p:
                        prob_dev, worst_p = max(d, prob_dev), f"n={n} k={k} bob={bob} omega*dt={phase:.6g}"
            report.cases.append(CaseResult(n, k, rho_dev, prob_dev, worst_p))
            if prob_dev > TOL:
                report.failure = f"outcome probability mismatch at {worst_p}: deviation {prob_dev:.3g}"
                return report
    return report
