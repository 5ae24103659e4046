"""Dense n-qubit statevectors: Dicke states, free evolution, ± rotations,
projective readout and two-qubit partial traces.

Indexing convention: the amplitude at index ``i`` belongs to the bitstring
of ``i`` written with ``n`` digits, and qubit 0 is the most significant bit.
So for n=3, index 0b100 is |100>, i.e. qubit 0 excited.

|1> sits an energy ``omega`` above |0> (hbar = 1), so free evolution for a
time ``t`` multiplies a basis amplitude by exp(-i*omega*t*popcount).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .analytic import DensityMatrix
from .errors import CapacityError

MAX_QUBITS = 24
NORM_TOL = 1e-12

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


class Basis(enum.Enum):
    COMPUTATIONAL = "computational"
    PLUSMINUS = "plusminus"


class Outcome(enum.IntEnum):
    ZERO_OR_PLUS = 0
    ONE_OR_MINUS = 1


@dataclass(frozen=True)
class MeasurementOutcome:
    qubit_index: int
    basis: Basis
    outcome: Outcome


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = a.size.bit_length() - 1
        if a.size < 2 or a.size != 1 << n:
            raise ValueError(f"amplitude count must be 2**n with n >= 1, got {a.size}")
        if n > MAX_QUBITS:
            raise CapacityError(f"{n} qubits exceeds the statevector cap of {MAX_QUBITS}")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self) -> np.ndarray:
        """Amplitudes as an n-axis array; axis q is qubit q."""
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DickeSpec:
    n: int
    k: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if int(self.k) != self.k or not 0 <= self.k <= self.n:
            raise ValueError(f"k must be in [0, {self.n}], got {self.k}")


def _check_capacity(n: int) -> None:
    if n > MAX_QUBITS:
        raise CapacityError(f"{n} qubits exceeds the statevector cap of {MAX_QUBITS}")


def _check_qubit(state: StateVector, q: int) -> None:
    if not 0 <= q < state.n_qubits:
        raise IndexError(f"qubit index {q} out of range for {state.n_qubits} qubits")


def popcounts(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)


def basis_state(bits: str) -> StateVector:
    """Computational basis state from a bitstring such as ``"010"``."""
    a = np.zeros(1 << len(bits), dtype=complex)
    a[int(bits, 2)] = 1.0
    return StateVector(a)


def dicke_state(n: int | DickeSpec, k: int | None = None) -> StateVector:
    """Equal superposition of every n-bit string with exactly k ones."""
    spec = n if isinstance(n, DickeSpec) else DickeSpec(n, k)
    _check_capacity(spec.n)
    mask = popcounts(spec.n) == spec.k
    a = np.zeros(1 << spec.n, dtype=complex)
    a[mask] = 1.0 / math.sqrt(math.comb(spec.n, spec.k))
    return StateVector(a)


def evolve(
    state: StateVector, t: float, omega: float, qubits: Iterable[int] | None = None
) -> StateVector:
    """Free evolution for time ``t``.

    With ``qubits`` given, only those qubits accrue phase; this is how a
    single party's clock running for its own duration is modelled.
    """
    n = state.n_qubits
    if qubits is None:
        excited = popcounts(n)
    else:
        qs = list(qubits)
        for q in qs:
            _check_qubit(state, q)
        idx = np.arange(1 << n)
        excited = sum(((idx >> (n - 1 - q)) & 1) for q in qs)
    return StateVector(state.amplitudes * np.exp(-1j * omega * t * excited))


def apply_single_qubit(state: StateVector, matrix: np.ndarray, qubit: int) -> StateVector:
    _check_qubit(state, qubit)
    psi = np.moveaxis(state.tensor(), qubit, 0)
    psi = np.tensordot(matrix, psi, axes=([1], [0]))
    return StateVector(np.moveaxis(psi, 0, qubit).reshape(-1))


def rotate_to_measurement_basis(state: StateVector, qubit_index: int) -> StateVector:
    """Hadamard on one qubit: |0> -> |+>, |1> -> |->.  Self-inverse."""
    return apply_single_qubit(state, _H, qubit_index)


def qubit_probabilities(state: StateVector, qubit: int) -> tuple[float, float]:
    """Born probabilities of reading 0 / 1 on ``qubit`` in the computational basis."""
    _check_qubit(state, qubit)
    p = np.moveaxis(np.abs(state.tensor()) ** 2, qubit, 0).reshape(2, -1).sum(axis=1)
    return float(p[0]), float(p[1])


def project_qubit(state: StateVector, qubit: int, outcome: int) -> tuple[float, StateVector]:
    """Project ``qubit`` onto |outcome>; return (probability, normalized post-state)."""
    _check_qubit(state, qubit)
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome}")
    psi = np.array(state.tensor())
    sl = [slice(None)] * state.n_qubits
    sl[qubit] = 1 - outcome
    psi[tuple(sl)] = 0.0
    p = float(np.vdot(psi, psi).real)
    if p < 1e-15:
        raise ArithmeticError(f"projection of qubit {qubit} onto {outcome} has vanishing norm")
    return p, StateVector(psi.reshape(-1) / math.sqrt(p))


def measure_qubit(
    state: StateVector,
    qubit_index: int,
    rng: np.random.Generator,
    basis: Basis = Basis.COMPUTATIONAL,
) -> tuple[MeasurementOutcome, StateVector]:
    """Projective readout of one qubit, drawing the outcome from ``rng``.

    In the ± basis the qubit is rotated, read, and rotated back, so the
    returned post-state is expressed in the computational frame.
    """
    basis = Basis(basis)
    work = rotate_to_measurement_basis(state, qubit_index) if basis is Basis.PLUSMINUS else state
    p0, p1 = qubit_probabilities(work, qubit_index)
    if p1 <= 0.0:
        bit = 0
    elif p0 <= 0.0:
        bit = 1
    else:
        bit = int(rng.random() * (p0 + p1) >= p0)
    _, post = project_qubit(work, qubit_index, bit)
    if basis is Basis.PLUSMINUS:
        post = rotate_to_measurement_basis(post, qubit_index)
    return MeasurementOutcome(qubit_index, basis, Outcome(bit)), post


def partial_trace_pair(state: StateVector, qubit_a: int, qubit_b: int) -> DensityMatrix:
    """Reduced density matrix of two qubits, ``qubit_a`` as the left label."""
    _check_qubit(state, qubit_a)
    _check_qubit(state, qubit_b)
    if qubit_a == qubit_b:
        raise ValueError("partial_trace_pair needs two distinct qubits")
    psi = np.moveaxis(state.tensor(), (qubit_a, qubit_b), (0, 1)).reshape(4, -1)
    return DensityMatrix(psi @ psi.conj().T, "computational")


def permute_qubits(state: StateVector, order: Iterable[int]) -> StateVector:
    """Relabel qubits: new qubit i is old qubit ``order[i]``."""
    return StateVector(np.transpose(state.tensor(), tuple(order)).reshape(-1))


def flip_all(state: StateVector) -> StateVector:
    """Apply X to every qubit (reverses the amplitude array)."""
    return StateVector(state.amplitudes[::-1])
