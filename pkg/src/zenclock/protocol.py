"""Multi-party clock synchronisation over a shared Dicke state.

Each round: the n parties share |Z_k(n)>.  Alice (party 0, the reference
clock) reads her qubit in the ± basis at t = 0 and broadcasts the bit.  Every
Bob j reads his qubit in the ± basis after it has run for his own skew
``skews[j-1]``.  Bobs tally their outcomes per announced bit and invert
P(+ | Alice +) = 1/2 + A0 cos(omega*dt) to recover |dt|.

Two engines produce tallies:

``"statevector"``
    Literally runs :func:`run_round` for every round: prepare, measure,
    evolve, measure, with a per-round generator seeded from (seed, round).
``"sampled"`` (default)
    All operations in a round act on different qubits and commute, so the
    joint outcome law of a round is |<outcomes| H^n E(skews) |Z_k(n)>|^2.  It
    is computed once and each round inverts its CDF with one uniform.  The
    CDF is ordered with Alice as the most significant bit, which is the
    same nested interval split as measuring Alice first and Bobs in
    ascending order.  Round r uses the r-th double of a Philox stream keyed
    by the seed, so any block of rounds can be drawn independently.

Both engines are deterministic in (config, seed) for any worker count, but
they consume randomness differently and do not agree round by round.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Any, Iterable, Literal, Mapping, Sequence

import numpy as np

from . import states
from .analytic import amplitude
from .errors import CapacityError, ConfigError

log = logging.getLogger(__name__)

PLUS, MINUS = "plus", "minus"
OUTCOME_NAMES = (PLUS, MINUS)
CHUNK = 1 << 14  # rounds per work unit; multiple of 4 so Philox blocks align
MESSAGE_FIELDS = frozenset({"round_index", "sender", "payload"})
SEED_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class PartyClock:
    party_id: int
    skew: float
    omega: float

    def __post_init__(self):
        if self.party_id == 0 and self.skew != 0:
            raise ValueError("party 0 holds the reference clock and has skew 0")
        if not self.omega > 0:
            raise ValueError("omega must be positive")


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    k: int
    omega: float
    skews: tuple[float, ...]
    shots: int
    seed: int
    use_minus_rounds: bool = False

    def __post_init__(self):
        object.__setattr__(self, "skews", tuple(float(s) for s in self.skews))
        _require(isinstance(self.n, int) and self.n >= 2, "n", "must be an integer >= 2")
        _require(
            isinstance(self.k, int) and 0 <= self.k <= self.n, "k", f"must be an integer in [0, {self.n}]"
        )
        _require(
            math.isfinite(self.omega) and self.omega > 0, "omega", "must be a positive finite number"
        )
        _require(
            len(self.skews) == self.n - 1, "skews", f"needs {self.n - 1} entries (parties 1..{self.n - 1})"
        )
        for i, s in enumerate(self.skews):
            _require(math.isfinite(s), f"skews[{i}]", "must be finite")
        _require(isinstance(self.shots, int) and self.shots >= 1, "shots", "must be an integer >= 1")
        _require(
            isinstance(self.seed, int) and 0 <= self.seed <= SEED_MAX, "seed", "must be an unsigned 64-bit integer"
        )
        if self.n > states.MAX_QUBITS:
            raise CapacityError(f"n={self.n} exceeds the statevector cap of {states.MAX_QUBITS}")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ProtocolConfig":
        known = {"n", "k", "omega", "skews", "shots", "seed", "use_minus_rounds"}
        extra = set(d) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown field")
        for name in ("n", "k", "omega", "skews", "shots", "seed"):
            if name not in d:
                raise ConfigError(name, "missing")
        for name in ("n", "k", "shots", "seed"):
            if isinstance(d[name], bool) or not isinstance(d[name], int):
                raise ConfigError(name, "must be an integer")
        if isinstance(d["omega"], bool) or not isinstance(d["omega"], (int, float)):
            raise ConfigError("omega", "must be a number")
        skews = d["skews"]
        if not isinstance(skews, list):
            raise ConfigError("skews", "must be a list of numbers")
        for i, s in enumerate(skews):
            if isinstance(s, bool) or not isinstance(s, (int, float)):
                raise ConfigError(f"skews[{i}]", "must be a number")
        minus = d.get("use_minus_rounds", False)
        if not isinstance(minus, bool):
            raise ConfigError("use_minus_rounds", "must be true or false")
        return cls(d["n"], d["k"], float(d["omega"]), tuple(skews), d["shots"], d["seed"], minus)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["skews"] = list(self.skews)
        return d

    @property
    def zero_amplitude(self) -> bool:
        return self.k in (0, self.n)

    def clocks(self) -> list[PartyClock]:
        return [PartyClock(0, 0.0, self.omega)] + [
            PartyClock(j, s, self.omega) for j, s in enumerate(self.skews, start=1)
        ]

    def check_estimable(self) -> None:
        """Raise ConfigError unless every skew can be recovered from the tallies."""
        if self.zero_amplitude:
            raise ConfigError("k", f"zero amplitude: k={self.k} gives no skew signal")
        for i, s in enumerate(self.skews):
            if abs(self.omega * s) >= math.pi:
                raise ConfigError(f"skews[{i}]", "|omega*skew| must be < pi to be identifiable")


def _require(ok: bool, name: str, msg: str) -> None:
    if not ok:
        raise ConfigError(name, msg)


@dataclass(frozen=True)
class ClassicalMessage:
    """Broadcast from Alice: the round number and her outcome bit, nothing else."""

    round_index: int
    sender: int
    payload: Literal["plus", "minus"]

    def __post_init__(self):
        if self.payload not in OUTCOME_NAMES:
            raise ValueError(f"payload must be 'plus' or 'minus', got {self.payload!r}")


class BroadcastChannel:
    """In-process classical broadcast that keeps every message for auditing."""

    def __init__(self):
        self.messages: list[ClassicalMessage] = []

    def publish(self, message: ClassicalMessage) -> None:
        self.messages.append(message)

    def extend(self, messages: Iterable[ClassicalMessage]) -> None:
        self.messages.extend(messages)


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    alice_outcome: str
    bob_outcomes: tuple[str, ...]


@dataclass
class TallyTable:
    """Counts indexed ``[party - 1, alice_bit, bob_bit]`` with 0 = plus, 1 = minus."""

    n: int
    counts: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros((self.n - 1, 2, 2), dtype=np.int64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.n - 1, 2, 2):
            raise ValueError(f"counts must have shape {(self.n - 1, 2, 2)}")
        if (self.counts < 0).any():
            raise ValueError("counts must be non-negative")

    def __add__(self, other: "TallyTable") -> "TallyTable":
        if other.n != self.n:
            raise ValueError("cannot merge tallies for different n")
        return TallyTable(self.n, self.counts + other.counts)

    def __eq__(self, other):
        return isinstance(other, TallyTable) and self.n == other.n and np.array_equal(
            self.counts, other.counts
        )

    @property
    def rounds(self) -> int:
        return int(self.counts[0].sum())

    def conditional(self, party: int, alice: str = PLUS) -> tuple[int, int]:
        """(bob plus, bob minus) counts for ``party`` over rounds Alice announced ``alice``."""
        c = self.counts[party - 1, OUTCOME_NAMES.index(alice)]
        return int(c[0]), int(c[1])

    def add_round(self, record: RoundRecord) -> None:
        a = OUTCOME_NAMES.index(record.alice_outcome)
        for j, b in enumerate(record.bob_outcomes):
            self.counts[j, a, OUTCOME_NAMES.index(b)] += 1

    def rows(self) -> list[dict[str, Any]]:
        return [
            {
                "party": j,
                "alice": alice,
                "bob_plus": self.conditional(j, alice)[0],
                "bob_minus": self.conditional(j, alice)[1],
            }
            for j in range(1, self.n)
            for alice in OUTCOME_NAMES
        ]


def round_rng(seed: int, round_index: int) -> np.random.Generator:
    return np.random.default_rng((seed, round_index))


def run_round(
    config: ProtocolConfig, round_index: int, rng: np.random.Generator | None = None
) -> tuple[RoundRecord, list[ClassicalMessage]]:
    """One full statevector round; see the module docstring for the flow."""
    if rng is None:
        rng = round_rng(config.seed, round_index)
    psi = states.dicke_state(config.n, config.k)
    m, psi = states.measure_qubit(psi, 0, rng, states.Basis.PLUSMINUS)
    alice = OUTCOME_NAMES[m.outcome]
    messages = [ClassicalMessage(round_index, 0, alice)]
    bobs = []
    for j, skew in enumerate(config.skews, start=1):
        psi = states.evolve(psi, skew, config.omega, qubits=(j,))
        m, psi = states.measure_qubit(psi, j, rng, states.Basis.PLUSMINUS)
        bobs.append(OUTCOME_NAMES[m.outcome])
    return RoundRecord(round_index, alice, tuple(bobs)), messages


def joint_outcome_distribution(config: ProtocolConfig) -> np.ndarray:
    """Probability of every ± outcome string of one round (bit 1 = minus, qubit 0 = Alice)."""
    psi = states.dicke_state(config.n, config.k)
    n = config.n
    idx = np.arange(1 << n)
    phase = np.zeros(1 << n)
    for j, skew in enumerate(config.skews, start=1):
        phase += skew * ((idx >> (n - 1 - j)) & 1)
    a = psi.amplitudes * np.exp(-1j * config.omega * phase)
    # Walsh-Hadamard on every qubit
    a = a.reshape((2,) * n)
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    for q in range(n):
        a = np.moveaxis(np.tensordot(h, np.moveaxis(a, q, 0), axes=([1], [0])), 0, q)
    p = np.abs(a.reshape(-1)) ** 2
    p[p < 1e-15] = 0.0  # round-off residue of exactly-forbidden outcomes
    return p / p.sum()


def round_uniforms(seed: int, start: int, stop: int) -> np.ndarray:
    """Uniforms for rounds ``start..stop-1``; ``start`` must be a multiple of 4."""
    if start % 4:
        raise ValueError("start must be a multiple of 4")
    bg = np.random.Philox(key=seed)
    bg.advance(start // 4)
    return np.random.Generator(bg).random(stop - start)


def _sampled_chunk(config, cdf, start, stop):
    u = round_uniforms(config.seed, start, stop)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    np.minimum(idx, cdf.size - 1, out=idx)
    n = config.n
    alice = (idx >> (n - 1)) & 1
    counts = np.empty((n - 1, 2, 2), dtype=np.int64)
    for j in range(1, n):
        bob = (idx >> (n - 1 - j)) & 1
        counts[j - 1] = np.bincount(alice * 2 + bob, minlength=4).reshape(2, 2)
    return TallyTable(n, counts), alice


def _statevector_chunk(config, start, stop):
    tally = TallyTable(config.n)
    alice = np.empty(stop - start, dtype=np.int64)
    for r in range(start, stop):
        rec, _ = run_round(config, r)
        tally.add_round(rec)
        alice[r - start] = OUTCOME_NAMES.index(rec.alice_outcome)
    return tally, alice


def run_protocol(
    config: ProtocolConfig,
    *,
    jobs: int = 1,
    engine: Literal["sampled", "statevector"] = "sampled",
    channel: BroadcastChannel | None = None,
) -> TallyTable:
    """Run ``config.shots`` rounds and return the merged tally.

    The result depends only on ``config`` and ``engine``; ``jobs`` changes
    how many threads share the work, never the counts.  Alice's broadcasts
    are published to ``channel`` in round order when one is given.
    """
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    bounds = [(s, min(s + CHUNK, config.shots)) for s in range(0, config.shots, CHUNK)]
    if engine == "sampled":
        cdf = np.cumsum(joint_outcome_distribution(config))
        work = lambda b: _sampled_chunk(config, cdf, *b)  # noqa: E731
    elif engine == "statevector":
        work = lambda b: _statevector_chunk(config, *b)  # noqa: E731
    else:
        raise ValueError(f"unknown engine {engine!r}")
    if jobs == 1:
        parts = [work(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(work, bounds))
    tally = TallyTable(config.n)
    for (start, _), (t, alice) in zip(bounds, parts):
        tally = tally + t
        if channel is not None:
            channel.extend(
                ClassicalMessage(start + i, 0, OUTCOME_NAMES[a]) for i, a in enumerate(alice.tolist())
            )
    log.debug("ran %d rounds (n=%d, k=%d, engine=%s)", tally.rounds, config.n, config.k, engine)
    return tally


@dataclass(frozen=True)
class PartyEstimate:
    party: int
    p_hat: float
    cos_hat: float
    estimated_abs_skew: float
    shots_used: int
    amplitude_used: float


@dataclass(frozen=True)
class EstimationResult:
    parties: tuple[PartyEstimate, ...]
    amplitude_used: float
    use_minus_rounds: bool

    def for_party(self, party: int) -> PartyEstimate:
        return self.parties[party - 1]

    def rows(self) -> list[dict[str, Any]]:
        return [asdict(p) for p in self.parties]


def estimate_from_probability(p_hat: float, a0: float, omega: float) -> tuple[float, float]:
    """Invert P = 1/2 + a0 cos(omega*dt); returns (clamped cos estimate, |dt| estimate)."""
    if a0 <= 0:
        raise ValueError("zero amplitude: the outcome statistics carry no skew information")
    cos_hat = min(1.0, max(-1.0, (p_hat - 0.5) / a0))
    return cos_hat, math.acos(cos_hat) / omega


def estimate_skew(
    tally: TallyTable, n: int, k: int, omega: float, *, use_minus_rounds: bool = False
) -> EstimationResult:
    """Per-Bob |skew| estimates from the conditional tallies.

    With ``use_minus_rounds`` the rounds where Alice announced minus are
    pooled in, counting a Bob minus there as agreement, since
    P(+ | Alice -) = 1/2 - A0 cos(omega*dt).
    """
    if tally.n != n:
        raise ValueError(f"tally is for n={tally.n}, not n={n}")
    a0 = amplitude(k, n)
    if a0 == 0:
        raise ValueError(f"zero amplitude: k={k} of n={n} carries no skew information")
    out = []
    for j in range(1, n):
        pp, pm = tally.conditional(j, PLUS)
        agree, total = pp, pp + pm
        if use_minus_rounds:
            mp, mm = tally.conditional(j, MINUS)
            agree, total = agree + mm, total + mp + mm
        if total == 0:
            raise ValueError(f"party {j} has no counted rounds to estimate from")
        p_hat = agree / total
        cos_hat, skew = estimate_from_probability(p_hat, a0, omega)
        out.append(PartyEstimate(j, p_hat, cos_hat, skew, total, float(a0)))
    return EstimationResult(tuple(out), float(a0), use_minus_rounds)


@dataclass(frozen=True)
class Violation:
    index: int
    reason: str


@dataclass
class AuditReport:
    checked: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict[str, Any]:
        return {
            "checked": self.checked,
            "violations": [asdict(v) for v in self.violations],
            "ok": self.ok,
        }


def _as_mapping(msg: Any) -> Mapping[str, Any] | None:
    if is_dataclass(msg) and not isinstance(msg, type):
        return asdict(msg)
    if isinstance(msg, Mapping):
        return msg
    return None


def audit_channel(messages: Sequence[Any]) -> AuditReport:
    """Check that every broadcast carries exactly a round number, sender and one outcome bit."""
    report = AuditReport()
    for i, msg in enumerate(messages):
        report.checked += 1
        d = _as_mapping(msg)
        if d is None:
            report.violations.append(Violation(i, f"not a message record: {type(msg).__name__}"))
            continue
        keys = set(d)
        if keys != MESSAGE_FIELDS:
            extra = sorted(keys - MESSAGE_FIELDS)
            missing = sorted(MESSAGE_FIELDS - keys)
            report.violations.append(Violation(i, f"field set mismatch: extra={extra} missing={missing}"))
            continue
        if d["payload"] not in OUTCOME_NAMES:
            report.violations.append(Violation(i, f"payload is not a single outcome bit: {d['payload']!r}"))
            continue
        for name in ("round_index", "sender"):
            v = d[name]
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                report.violations.append(Violation(i, f"{name} must be a non-negative integer"))
                break
    return report
