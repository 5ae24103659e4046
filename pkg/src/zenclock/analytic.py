"""Closed-form two-party statistics of Dicke (Zen) states.

Everything here works from integer counts and never touches a statevector,
so it scales to very large ``n``.  The brute-force counterpart lives in
:mod:`zenclock.states`; :mod:`zenclock.verify` checks one against the other.

Basis ordering for two-qubit matrices is |00>, |01>, |10>, |11> with Alice
(the left label) as the more significant bit.  In the ``plusminus`` basis the
same slots mean |++>, |+->, |-+>, |-->.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

Basis = Literal["computational", "plusminus"]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
_HH = np.kron(_H, _H)


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray
    basis: Basis = "computational"

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
            raise ValueError(f"density matrix must be 2x2 or 4x4, got shape {m.shape}")
        if self.basis not in ("computational", "plusminus"):
            raise ValueError(f"unknown basis label {self.basis!r}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def problems(self) -> list[str]:
        """Return the violated density-matrix invariants (empty when valid)."""
        m = self.entries
        out = []
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERMITIAN_TOL:
            out.append(f"not Hermitian (max deviation {herm:.3g})")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            out.append(f"trace {tr:.15g} != 1")
        low = np.linalg.eigvalsh((m + m.conj().T) / 2).min()
        if low < -PSD_TOL:
            out.append(f"negative eigenvalue {low:.3g}")
        return out

    def is_valid(self) -> bool:
        return not self.problems()


def _check_n(n: int) -> None:
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n}")


def _check_nk(n: int, k: int) -> None:
    _check_n(n)
    if int(k) != k or not 0 <= k <= n:
        raise ValueError(f"k must be an integer in [0, {n}], got {k}")


def rho_ab_numerators(n: int, k: int) -> tuple[int, int, int, int]:
    """Integer numerators of the pair density matrix over the common n(n-1).

    Returns ``(both_zero, coherence, both_one, denominator)``; the |01>, |10>
    diagonal entries and the |01><10| coherence all share ``coherence``.
    """
    _check_nk(n, k)
    return (n - k) * (n - k - 1), k * (n - k), k * (k - 1), n * (n - 1)


def rho_ab_computational(n: int, k: int) -> DensityMatrix:
    zz, c, oo, den = rho_ab_numerators(n, k)
    m = np.array(
        [
            [zz, 0, 0, 0],
            [0, c, c, 0],
            [0, c, c, 0],
            [0, 0, 0, oo],
        ],
        dtype=float,
    ) / den
    return DensityMatrix(m, "computational")


def rho_ab_measurement(rho_c: DensityMatrix) -> DensityMatrix:
    """Rewrite a two-qubit density matrix in the |+>/|-> basis of both qubits.

    The rotation is its own inverse, so applying this to a ``plusminus``
    matrix gives back the computational one.
    """
    if not isinstance(rho_c, DensityMatrix) or rho_c.dim != 4:
        raise ValueError("expected a 4x4 DensityMatrix")
    problems = rho_c.problems()
    if problems:
        raise ValueError("malformed density matrix: " + "; ".join(problems))
    other = "plusminus" if rho_c.basis == "computational" else "computational"
    return DensityMatrix(_HH @ rho_c.entries @ _HH, other)


def evolve_bob(rho_c: DensityMatrix, omega: float, delta_t: float) -> DensityMatrix:
    """Let Bob's qubit (right label) accrue phase exp(-i*omega*delta_t) on |1>."""
    if rho_c.dim != 4 or rho_c.basis != "computational":
        raise ValueError("expected a 4x4 computational-basis DensityMatrix")
    phase = np.exp(-1j * omega * delta_t)
    u = np.diag([1.0, phase, 1.0, phase])
    return DensityMatrix(u @ rho_c.entries @ u.conj().T, "computational")


def bob_conditional_density(
    rho_m: DensityMatrix, alice_outcome: Literal["plus", "minus"] = "plus"
) -> DensityMatrix:
    """Bob's 2x2 state after Alice reads ``alice_outcome`` in the ± basis."""
    if rho_m.dim != 4 or rho_m.basis != "plusminus":
        raise ValueError("expected a 4x4 plusminus-basis DensityMatrix")
    if alice_outcome not in ("plus", "minus"):
        raise ValueError(f"alice_outcome must be 'plus' or 'minus', got {alice_outcome!r}")
    a = 0 if alice_outcome == "plus" else 1
    block = rho_m.entries.reshape(2, 2, 2, 2)[a, :, a, :]
    p = np.trace(block).real
    if p <= 1e-15:
        raise ValueError(f"Alice outcome {alice_outcome!r} has zero probability")
    return DensityMatrix(block / p, "plusminus")


def chain_prob_plus(
    n: int,
    k: int,
    omega: float,
    delta_t: float,
    alice_outcome: Literal["plus", "minus"] = "plus",
) -> float:
    """P(Bob reads |+>) via the explicit density-matrix chain.

    Pair state -> Bob's phase -> ± basis -> condition on Alice -> read Bob.
    Slower than :func:`prob_plus` but shares none of its algebra.
    """
    rho = evolve_bob(rho_ab_computational(n, k), omega, delta_t)
    rho_b = bob_conditional_density(rho_ab_measurement(rho), alice_outcome)
    return float(rho_b.entries[0, 0].real)


def prob_plus(n: int, k: int, omega: float, delta_t: float) -> float:
    """P(Bob reads |+> | Alice announced |+>) = 1/2 + A0(k, n) cos(omega*delta_t)."""
    _, c, _, den = rho_ab_numerators(n, k)
    return 0.5 + (c / den) * math.cos(omega * delta_t)


class Amplitude(float):
    """Oscillation amplitude k(n-k)/(n(n-1)); a float that remembers (k, n)."""

    k: int
    n: int

    def __new__(cls, k: int, n: int):
        _, c, _, den = rho_ab_numerators(n, k)
        self = super().__new__(cls, c / den)
        self.k = k
        self.n = n
        return self

    def as_fraction(self) -> Fraction:
        return Fraction(self.k * (self.n - self.k), self.n * (self.n - 1))

    def __repr__(self):
        return f"Amplitude(k={self.k}, n={self.n}, value={float(self)!r})"


def amplitude(k: int, n: int) -> Amplitude:
    return Amplitude(k, n)


def k_opt(n: int) -> int:
    _check_n(n)
    return n // 2


def a0_opt(n: int) -> float:
    # floor*ceil: the printed floor*floor form undercounts at odd n
    _check_n(n)
    return (n // 2) * ((n + 1) // 2) / (n * (n - 1))
